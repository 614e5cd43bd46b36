// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "speeji/errors.hpp"
#include "speeji/pipeline.hpp"
#include "speeji/render.hpp"
#include "speeji/service/http_server.hpp"

#include "support/fake_backend.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"
#include "support/signals.hpp"
#include "support/temp_dir.hpp"
#include "support/ws_client.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>

#include <fmt/format.h>

using namespace speeji;
using namespace speeji::service;
using namespace std::chrono_literals;
using speeji::testing::FakeBackend;
using speeji::testing::Reply;
using speeji::testing::TempDir;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string as_string(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

httplib::Result post_wav(httplib::Client& client, const std::string& cid, const std::string& bytes) {
    httplib::MultipartFormDataItems items{{"audio", bytes, "m.wav", "audio/wav"}, {"sender", "tester", "", ""}};
    return client.Post(("/api/conversations/" + cid + "/messages").c_str(), items);
}

std::string new_conversation(httplib::Client& client) {
    auto res = client.Post("/api/conversations", R"({"title":"acceptance"})", "application/json");
    if (!res || res->status != 201) throw std::runtime_error("cannot create conversation");
    return json::parse(res->body)["conversation_id"];
}

bool wait_until(const std::function<bool()>& pred, std::chrono::milliseconds budget) {
    const auto deadline = Clock::now() + budget;
    while (Clock::now() < deadline) {
        if (pred()) return true;
        std::this_thread::sleep_for(10ms);
    }
    return pred();
}

Outcome chunk_partition() {
    std::mt19937_64 rng(20261018);
    std::uniform_real_distribution<double> dur(0.1, 120.0);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        const double d = dur(rng);
        const auto spans = chunk_spans(d, 0.5);
        bool ok = !spans.empty() && spans.front().start_s == 0.0 && spans.back().end_s == d;
        for (std::size_t k = 0; ok && k < spans.size(); ++k) {
            const double len = spans[k].end_s - spans[k].start_s;
            if (spans[k].index != k) ok = false;
            if (k + 1 < spans.size() && spans[k].end_s != spans[k + 1].start_s) ok = false;
            if (k + 1 < spans.size() && len != 0.5) ok = false;
            if (spans.size() > 1 && len < 0.25) ok = false;
        }
        if (!ok) ++violations;
    }
    return {violations == 0, fmt::format("{} violations over 1000 durations", violations)};
}

Outcome mapping_oracle() {
    const auto table = EmojiTable::load(std::string(SPEEJI_DATA_DIR) + "/emoji_table.json");
    if (table.size() != 22) return {false, fmt::format("shipped table has {} entries", table.size())};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int agree = 0;
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng), a = u(rng);
        const auto& got = nearest_emoji(VadPoint(v, a, 0.0), table);
        const auto oracle = speeji::testing::brute_force_nearest(v, a, table.entries());
        const double got_d = std::hypot(got.valence - v, got.arousal - a);
        if (got.glyph == table.entries()[oracle.index].glyph || std::fabs(got_d - oracle.distance) <= 1e-9) ++agree;
    }
    return {agree == 1000, fmt::format("{}/1000 points agree with the brute-force scan", agree)};
}

Outcome determinism() {
    TempDir dir;
    const auto wav = dir.path() / "fixed10s.wav";
    {
        const auto bytes = encode_wav(speeji::testing::voice_like(10.0));
        std::ofstream(wav, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                   static_cast<std::streamsize>(bytes.size()));
    }
    std::array<std::string, 2> desc, svg;
    for (int i = 0; i < 2; ++i) {
        const auto out = dir.path() / fmt::format("d{}.json", i);
        const auto r = speeji::testing::run({"analyze", wav.string(), "--backend", "baseline", "--out", out.string()});
        if (r.exit_code != 0) return {false, fmt::format("analyze exited {}: {}", r.exit_code, r.err)};
        auto j = json::parse(read_text(out));
        j.erase("message_id");
        desc[i] = j.dump();
        const auto s = speeji::testing::run({"render", out.string()});
        if (s.exit_code != 0) return {false, fmt::format("render exited {}: {}", s.exit_code, s.err)};
        svg[i] = s.out;
    }
    const bool same_d = desc[0] == desc[1];
    const bool same_s = svg[0] == svg[1];
    return {same_d && same_s, fmt::format("descriptors {}, SVGs {} ({} and {} bytes)", same_d ? "identical" : "differ",
                                          same_s ? "identical" : "differ", desc[0].size(), svg[0].size())};
}

Outcome baseline_monotonicity() {
    const auto quiet = speeji::testing::sine(440, 0.1, 1.0);
    const auto loud = speeji::testing::sine(440, 0.5, 1.0);
    const auto silent = speeji::testing::silence(1.0);
    const VadPoint q = baseline_analyze(quiet, {0, 1});
    const VadPoint l = baseline_analyze(loud, {0, 1});
    const VadPoint s = baseline_analyze(silent, {0, 1});
    const bool mono = l.arousal() > q.arousal();
    const bool exact = s.valence() == -1.0 && s.arousal() == -1.0 && s.dominance() == -1.0;
    return {mono && exact, fmt::format("arousal(0.5)={:.6f} > arousal(0.1)={:.6f}; silence=({}, {}, {})", l.arousal(),
                                       q.arousal(), s.valence(), s.arousal(), s.dominance())};
}

Outcome two_emoji_contract() {
    const AudioClip clip = speeji::testing::voice_like(6.0);
    const double d = clip.duration_s();
    const TimeSpan ending = ending_span(d);
    // Raw [0,1] triples that land far apart on the canonical scale.
    const std::array<double, 3> whole_raw{0.90, 0.85, 0.6};
    const std::array<double, 3> ending_raw{0.15, 0.90, 0.4};
    FakeBackend fake;
    fake.on_analyze([&](const json& req) {
        json results = json::array();
        for (const auto& s : req["spans"]) {
            std::array<double, 3> raw{0.5, 0.5, 0.5};
            if (s["start_s"] == 0.0 && s["end_s"] == d) raw = whole_raw;
            if (s["start_s"] == ending.start_s && s["end_s"] == ending.end_s) raw = ending_raw;
            results.push_back({{"valence", raw[0]}, {"arousal", raw[1]}, {"dominance", raw[2]}});
        }
        return Reply{200, json{{"results", results}}.dump()};
    });
    BackendConfig cfg;
    cfg.kind = BackendConfig::Kind::External;
    cfg.endpoint_url = fake.url();
    ExternalSerBackend ser(cfg);
    const auto& table = EmojiTable::builtin();
    const auto desc = augment(clip, table, ser, nullptr, AugmentOptions{}, "m-two-emoji");

    auto to_vad = [](const std::array<double, 3>& r) { return VadPoint(2 * r[0] - 1, 2 * r[1] - 1, 2 * r[2] - 1); };
    const auto& want_overall = nearest_emoji(to_vad(whole_raw), table);
    const auto& want_ending = nearest_emoji(to_vad(ending_raw), table);

    bool whole_requested = false;
    for (const auto& req : fake.analyze_requests()) {
        for (const auto& s : req["spans"]) {
            if (s["start_s"] == 0.0 && s["end_s"] == d) whole_requested = true;
        }
    }
    const bool ok = desc.status == AugmentationStatus::Done && desc.overall_emoji && desc.ending_emoji &&
                    desc.overall_emoji->glyph == want_overall.glyph && desc.ending_emoji->glyph == want_ending.glyph &&
                    want_overall.glyph != want_ending.glyph && whole_requested;
    return {ok, fmt::format("overall {} (want {}), ending {} (want {}), whole-message span requested: {}",
                            desc.overall_emoji ? desc.overall_emoji->glyph : "-", want_overall.glyph,
                            desc.ending_emoji ? desc.ending_emoji->glyph : "-", want_ending.glyph,
                            whole_requested ? "yes" : "no")};
}

Outcome protocol_robustness() {
    struct Scenario {
        std::string name;
        FakeBackend::Handler handler;
    };
    const std::vector<Scenario> scenarios{
        {"timeout",
         [](const json& req) {
             auto r = FakeBackend::constant(0.5, 0.5, 0.5)(req);
             r.delay = 1500ms;
             return r;
         }},
        {"arity mismatch",
         [](const json& req) {
             json results = json::array();
             for (std::size_t i = 0; i + 1 < req["spans"].size(); ++i) {
                 results.push_back({{"valence", 0.5}, {"arousal", 0.5}, {"dominance", 0.5}});
             }
             return Reply{200, json{{"results", results}}.dump()};
         }},
        {"out of range",
         [](const json& req) {
             json results = json::array();
             for (std::size_t i = 0; i < req["spans"].size(); ++i) {
                 results.push_back({{"valence", i == 1 ? 1.7 : 0.5}, {"arousal", 0.5}, {"dominance", -0.2}});
             }
             return Reply{200, json{{"results", results}}.dump()};
         }},
    };
    int passed = 0;
    std::vector<std::string> notes;
    for (const auto& sc : scenarios) {
        FakeBackend fake;
        fake.on_analyze(sc.handler);
        TempDir dir;
        ServiceConfig cfg;
        cfg.data_dir = dir.path();
        cfg.ser.kind = BackendConfig::Kind::External;
        cfg.ser.endpoint_url = fake.url();
        cfg.ser.timeout_s = 0.5;
        cfg.ser.retry_count = 0;
        MessageService svc(cfg);
        HttpServer server(svc, "127.0.0.1", 0);
        httplib::Client client("127.0.0.1", server.port());
        const std::string cid = new_conversation(client);
        const auto bytes = as_string(encode_wav(speeji::testing::voice_like(3.0)));
        auto posted = post_wav(client, cid, bytes);
        if (!posted || posted->status != 202) {
            notes.push_back(sc.name + ": post refused");
            continue;
        }
        const std::string mid = json::parse(posted->body)["message_id"];
        wait_until([&] { return svc.get_message(mid).status != MessageStatus::Processing; }, 10s);
        auto got = client.Get(("/api/messages/" + mid).c_str());
        auto audio = client.Get(("/api/messages/" + mid + "/audio").c_str());
        const bool retrievable = got && got->status == 200;
        const std::string status = retrievable ? json::parse(got->body)["status"].get<std::string>() : "-";
        bool playable = audio && audio->status == 200 && audio->body == bytes;
        if (playable) {
            try {
                playable = decode_wav(std::span(reinterpret_cast<const std::uint8_t*>(audio->body.data()),
                                                audio->body.size()))
                               .duration_s() == 3.0;
            } catch (const std::exception&) {
                playable = false;
            }
        }
        const bool ok = retrievable && status == "augmentation_failed" && playable;
        if (ok) ++passed;
        notes.push_back(fmt::format("{}: {}{}", sc.name, status, playable ? ", playable" : ", NOT playable"));
    }
    std::string detail = fmt::format("{}/3 scenarios (", passed);
    for (std::size_t i = 0; i < notes.size(); ++i) detail += (i ? "; " : "") + notes[i];
    return {passed == 3, detail + ")"};
}

Outcome service_round_trip() {
    TempDir dir;
    ServiceConfig cfg;
    cfg.data_dir = dir.path();
    MessageService svc(cfg);
    HttpServer server(svc, "127.0.0.1", 0);
    httplib::Client client("127.0.0.1", server.port());
    const std::string cid = new_conversation(client);
    speeji::testing::WsClient ws("127.0.0.1", server.port(), "/api/ws?conversation=" + cid);

    const auto canonical = encode_wav(speeji::testing::voice_like(3.0));
    const auto bytes = as_string(canonical);
    const auto t0 = Clock::now();
    auto posted = post_wav(client, cid, bytes);
    const double post_ms = ms_since(t0);
    if (!posted || posted->status != 202) return {false, "post failed"};
    const auto m = json::parse(posted->body);
    const std::string mid = m["message_id"];

    double event_ms = -1;
    while (ms_since(t0) < 5000) {
        auto frame = ws.next(100ms);
        if (!frame) continue;
        const auto e = json::parse(*frame);
        if (e["type"] == "message.augmented" && e["message_id"] == mid) {
            event_ms = ms_since(t0);
            break;
        }
    }
    auto audio = client.Get(("/api/messages/" + mid + "/audio").c_str());
    bool exact = false;
    if (audio && audio->status == 200) {
        const auto served = decode_wav(std::span(reinterpret_cast<const std::uint8_t*>(audio->body.data()),
                                                 audio->body.size()));
        const auto stored = decode_wav(svc.message_audio(mid));
        const auto posted_clip = decode_wav(canonical);
        exact = served.samples().size() == stored.samples().size() &&
                std::equal(served.samples().begin(), served.samples().end(), stored.samples().begin()) &&
                std::equal(served.samples().begin(), served.samples().end(), posted_clip.samples().begin(),
                           posted_clip.samples().end());
    }
    const bool ok = m["status"] == "processing" && post_ms < 200.0 && event_ms >= 0 && event_ms < 2000.0 && exact;
    return {ok, fmt::format("processing response in {:.1f} ms, augmented event at {:.1f} ms, audio {}", post_ms,
                            event_ms, exact ? "exact" : "MISMATCH")};
}

Outcome throughput() {
    TempDir dir;
    ServiceConfig cfg;
    cfg.data_dir = dir.path();
    MessageService svc(cfg);
    HttpServer server(svc, "127.0.0.1", 0);
    httplib::Client client("127.0.0.1", server.port());
    const std::string cid = new_conversation(client);
    speeji::testing::WsClient ws("127.0.0.1", server.port(), "/api/ws?conversation=" + cid);

    std::vector<std::string> bodies;
    for (int i = 0; i < 50; ++i) {
        // Distinct audio per message so nothing is shared through content addressing.
        bodies.push_back(as_string(encode_wav(speeji::testing::sine(200.0 + 10.0 * i, 0.3, 10.0))));
    }
    int done = 0;
    const auto t0 = Clock::now();
    for (const auto& body : bodies) {
        auto posted = post_wav(client, cid, body);
        if (!posted || posted->status != 202) break;
        const std::string mid = json::parse(posted->body)["message_id"];
        bool augmented = false;
        while (!augmented && ms_since(t0) < 60000) {
            auto frame = ws.next(100ms);
            if (!frame) continue;
            const auto e = json::parse(*frame);
            augmented = e["type"] == "message.augmented" && e["message_id"] == mid && e["status"] == "done";
        }
        if (!augmented) break;
        ++done;
    }
    const double total_s = ms_since(t0) / 1000.0;
    return {done == 50 && total_s < 60.0, fmt::format("{}/50 sequential 10 s messages augmented in {:.2f} s", done, total_s)};
}

Outcome crash_safety() {
    TempDir dir;
    const std::string data = (dir.path() / "data").string();
    FakeBackend slow;
    slow.on_analyze([](const json& req) {
        auto r = FakeBackend::constant(0.6, 0.6, 0.5)(req);
        r.delay = 1000ms;
        return r;
    });
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> jitter(0, 150);
    std::size_t orphans = 0, unresolved = 0, listed_total = 0, mid_augmentation = 0;
    std::string failure;

    for (int trial = 0; trial < 20; ++trial) {
        {
            speeji::testing::ServeProcess victim({"--data-dir", data, "--backend", "external", "--url", slow.url(),
                                                  "--timeout", "30"});
            if (!victim.started()) return {false, fmt::format("trial {}: serve did not start", trial)};
            httplib::Client client(victim.host(), victim.port());
            const std::string cid = new_conversation(client);
            const auto before = slow.analyze_requests().size();
            for (int k = 0; k < 3; ++k) {
                post_wav(client, cid, as_string(encode_wav(speeji::testing::sine(300.0 + 40 * k + trial, 0.3, 2.0))));
            }
            // Kill once an augmentation request is in flight, plus jitter.
            wait_until([&] { return slow.analyze_requests().size() > before; }, 5s);
            if (slow.analyze_requests().size() > before) ++mid_augmentation;
            std::this_thread::sleep_for(std::chrono::milliseconds(jitter(rng)));
            ::kill(victim.pid(), SIGKILL);
            victim.wait_for(5s);
        }

        speeji::testing::ServeProcess revived({"--data-dir", data, "--backend", "baseline"});
        if (!revived.started()) return {false, fmt::format("trial {}: restart failed", trial)};
        httplib::Client client(revived.host(), revived.port());
        auto convs = client.Get("/api/conversations");
        if (!convs) return {false, fmt::format("trial {}: restarted service unreachable", trial)};
        for (const auto& c : json::parse(convs->body)) {
            const std::string path = "/api/conversations/" + c["conversation_id"].get<std::string>() + "/messages";
            json messages;
            const bool settled = wait_until(
                [&] {
                    auto r = client.Get(path.c_str());
                    if (!r || r->status != 200) return false;
                    messages = json::parse(r->body);
                    for (const auto& m : messages) {
                        if (m["status"] == "processing") return false;
                    }
                    return true;
                },
                20s);
            for (const auto& m : messages) {
                ++listed_total;
                if (!settled && m["status"] == "processing") ++unresolved;
                auto audio = client.Get(("/api/messages/" + m["message_id"].get<std::string>() + "/audio").c_str());
                if (!audio || audio->status != 200 || audio->body.empty()) ++orphans;
            }
        }
        ::kill(revived.pid(), SIGTERM);
        revived.wait_for(12s);
    }
    const bool ok = orphans == 0 && unresolved == 0 && mid_augmentation == 20;
    return {ok, fmt::format("20 kill/restart trials ({} killed mid-augmentation): {} orphans, {} unresolved of {} "
                            "listed-message checks",
                            mid_augmentation, orphans, unresolved, listed_total)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"chunk partition", chunk_partition},
        {"mapping oracle", mapping_oracle},
        {"determinism", determinism},
        {"baseline monotonicity", baseline_monotonicity},
        {"two-emoji contract", two_emoji_contract},
        {"protocol robustness", protocol_robustness},
        {"service round-trip", service_round_trip},
        {"desk-scale throughput", throughput},
        {"crash safety", crash_safety},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o{false, ""};
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        if (!o.pass) ++failed;
        std::cout << fmt::format("{} {}: {}", o.pass ? "PASS" : "FAIL", name, o.detail) << std::endl;
    }
    std::cout << fmt::format("{}/{} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
    return failed == 0 ? 0 : 1;
}
