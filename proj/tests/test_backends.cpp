#include "speeji/backends.hpp"
#include "speeji/codec.hpp"
#include "speeji/errors.hpp"

#include "support/fake_backend.hpp"
#include "support/signals.hpp"

#include <doctest.h>

#include <cmath>

using namespace speeji;
using speeji::testing::FakeBackend;
using speeji::testing::Reply;

namespace {

BackendConfig external(const std::string& url, double timeout = 2.0, int retries = 1) {
    BackendConfig cfg;
    cfg.kind = BackendConfig::Kind::External;
    cfg.endpoint_url = url;
    cfg.timeout_s = timeout;
    cfg.retry_count = retries;
    return cfg;
}

std::vector<TimeSpan> four_spans() { return {{0, 0.5}, {0.5, 1.0}, {0, 1.0}, {0, 1.0}}; }

BackendError::Kind error_kind(SerBackend& ser, const AudioClip& clip, std::vector<TimeSpan> spans) {
    try {
        ser.analyze(clip, spans);
    } catch (const BackendError& e) {
        return e.kind();
    }
    FAIL("expected a BackendError");
    return BackendError::Kind::Connection;
}

AudioClip sine_at_dbfs(double freq, double dbfs, double seconds) {
    return testing::sine(freq, std::sqrt(2.0) * std::pow(10.0, dbfs / 20.0), seconds);
}

}  // namespace

TEST_CASE("BackendConfig validation") {
    BackendConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.kind = BackendConfig::Kind::External;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.endpoint_url = "http://localhost:1";
    cfg.timeout_s = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(ExternalSerBackend(external("localhost:9000")), ConfigError);
}

TEST_CASE("baseline_analyze formulas") {
    const auto quiet = baseline_analyze(testing::silence(1.0), {0, 1});
    CHECK(quiet == VadPoint(-1, -1, -1));

    const AudioClip minus30 = sine_at_dbfs(440, -30.0, 1.0);
    CHECK(baseline_analyze(minus30, {0, 1}).arousal() == doctest::Approx(-1.0 / 3.0).epsilon(1e-4));

    // Centroid from the DFT oracle is 1500.000144 Hz for this signal.
    const AudioClip tone = sine_at_dbfs(1500, -20.0, 0.5);
    const auto p = baseline_analyze(tone, {0, 0.5});
    CHECK(std::fabs(p.valence()) <= 0.02);
    CHECK(p.arousal() == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("baseline arousal rises strictly with amplitude until the clamp") {
    double prev = -1.0;
    for (double amp = 0.015; amp <= 1.0; amp *= 1.25) {  // -40 dBFS floor sits near 0.014
        const double a = baseline_analyze(testing::sine(440, amp, 0.5), {0, 0.5}).arousal();
        if (prev < 1.0) {
            CHECK(a > prev);
        } else {
            CHECK(a == 1.0);
        }
        prev = a;
    }
}

TEST_CASE("BaselineBackend answers every span independently") {
    BaselineBackend ser;
    const AudioClip clip = testing::voice_like(2.0);
    const std::vector<TimeSpan> spans{{0, 0.5}, {0.5, 2.0}, {0, 2.0}};
    const auto out = ser.analyze(clip, spans);
    REQUIRE(out.size() == 3);
    CHECK(out[2] == baseline_analyze(clip, {0, 2.0}));
}

TEST_CASE("request body follows the wire protocol") {
    const AudioClip clip({0.5F, -0.25F, 0.0F}, 16000);
    const std::vector<TimeSpan> spans{{0.0, 0.5}, {0.25, 1.0}};
    const auto body = nlohmann::json::parse(build_request_body(clip, spans));
    CHECK(body["sample_rate"] == 16000);
    REQUIRE(body["spans"].size() == 2);
    CHECK(body["spans"][1]["start_s"] == 0.25);
    CHECK(body["spans"][1]["end_s"] == 1.0);
    const auto pcm = base64_decode(body["audio_b64"].get<std::string>());
    CHECK(pcm == std::vector<std::uint8_t>{0x00, 0x40, 0x00, 0xE0, 0x00, 0x00});
}

TEST_CASE("external_analyze rescales the native scale") {
    FakeBackend fake;
    ExternalSerBackend ser(external(fake.url()));
    const AudioClip clip = testing::voice_like(1.0);

    fake.on_analyze(FakeBackend::constant(0.5, 0.5, 0.5));
    for (const auto& p : ser.analyze(clip, four_spans())) CHECK(p == VadPoint(0, 0, 0));

    fake.on_analyze(FakeBackend::constant(1.0, 0.0, 0.25));
    for (const auto& p : ser.analyze(clip, four_spans())) CHECK(p == VadPoint(1.0, -1.0, -0.5));

    const auto reqs = fake.analyze_requests();
    REQUIRE(reqs.size() == 2);
    CHECK(reqs[0]["spans"].size() == 4);
}

TEST_CASE("rescale is an affine bijection") {
    for (int i = 0; i <= 100; ++i) {
        const double raw = i / 100.0;
        const std::string body = nlohmann::json{
            {"results", {{{"valence", raw}, {"arousal", 1 - raw}, {"dominance", raw}}}}}.dump();
        const auto p = parse_analyze_response(body, 1)[0];
        CHECK(std::fabs((p.valence() + 1) / 2 - raw) <= 1e-9);
        CHECK(std::fabs((p.arousal() + 1) / 2 - (1 - raw)) <= 1e-9);
    }
}

TEST_CASE("external_analyze error classes") {
    FakeBackend fake;
    const AudioClip clip = testing::voice_like(1.0);

    SUBCASE("arity mismatch") {
        ExternalSerBackend ser(external(fake.url()));
        fake.on_analyze([](const nlohmann::json&) {
            nlohmann::json r = nlohmann::json::array();
            for (int i = 0; i < 3; ++i) r.push_back({{"valence", .5}, {"arousal", .5}, {"dominance", .5}});
            return Reply{200, nlohmann::json{{"results", r}}.dump()};
        });
        CHECK(error_kind(ser, clip, four_spans()) == BackendError::Kind::MalformedResponse);
    }
    SUBCASE("out of range carries the span index") {
        ExternalSerBackend ser(external(fake.url()));
        fake.on_analyze([](const nlohmann::json&) {
            nlohmann::json r = nlohmann::json::array();
            for (int i = 0; i < 4; ++i) {
                r.push_back({{"valence", i == 2 ? 1.5 : 0.5}, {"arousal", .5}, {"dominance", .5}});
            }
            return Reply{200, nlohmann::json{{"results", r}}.dump()};
        });
        try {
            ser.analyze(clip, four_spans());
            FAIL("expected error");
        } catch (const BackendError& e) {
            CHECK(e.kind() == BackendError::Kind::OutOfRange);
            CHECK(e.affected_spans() == std::vector<std::size_t>{2});
        }
    }
    SUBCASE("garbage body") {
        ExternalSerBackend ser(external(fake.url()));
        fake.on_analyze([](const nlohmann::json&) { return Reply{200, "<html>"}; });
        CHECK(error_kind(ser, clip, four_spans()) == BackendError::Kind::MalformedResponse);
    }
    SUBCASE("timeout retries once then fails") {
        ExternalSerBackend ser(external(fake.url(), 0.2, 1));
        fake.on_analyze([](const nlohmann::json& req) {
            Reply r = FakeBackend::constant(.5, .5, .5)(req);
            r.delay = std::chrono::milliseconds(600);
            return r;
        });
        CHECK(error_kind(ser, clip, four_spans()) == BackendError::Kind::Timeout);
        CHECK(fake.analyze_requests().size() == 2);
    }
    SUBCASE("server error is retried") {
        ExternalSerBackend ser(external(fake.url(), 2.0, 2));
        fake.on_analyze([](const nlohmann::json&) { return Reply{503, "busy"}; });
        CHECK(error_kind(ser, clip, four_spans()) == BackendError::Kind::HttpStatus);
        CHECK(fake.analyze_requests().size() == 3);
    }
    SUBCASE("connection refused") {
        ExternalSerBackend ser(external("http://127.0.0.1:1", 1.0, 0));
        CHECK(error_kind(ser, clip, four_spans()) == BackendError::Kind::Connection);
    }
}

TEST_CASE("external_transcribe") {
    FakeBackend fake;
    ExternalTranscriber asr(external(fake.url()));
    const AudioClip clip = testing::voice_like(5.0);

    fake.on_transcribe(testing::transcript_reply({{0, 2, "hello there"}, {2, 5, "see you"}}));
    const auto t = asr.transcribe(clip);
    REQUIRE(t.size() == 2);
    CHECK(t[0] == TranscriptSegment{0, 2, "hello there"});
    CHECK(t[1] == TranscriptSegment{2, 5, "see you"});
    const auto req = fake.transcribe_requests().at(0);
    CHECK(req["spans"].size() == 1);
    CHECK(req["spans"][0]["end_s"] == 5.0);

    fake.on_transcribe(testing::transcript_reply({{0, 2.5, "a"}, {2, 5, "b"}}));
    CHECK_THROWS_AS(asr.transcribe(clip), BackendError);

    fake.on_transcribe(testing::transcript_reply({}));
    CHECK(asr.transcribe(clip).empty());
}

TEST_CASE("validate_transcript") {
    CHECK_NOTHROW(validate_transcript(std::vector<TranscriptSegment>{{0, 1, "a"}, {1, 2, "b"}}));
    CHECK_THROWS_AS(validate_transcript(std::vector<TranscriptSegment>{{1, 1, "a"}}), BackendError);
    CHECK_THROWS_AS(validate_transcript(std::vector<TranscriptSegment>{{2, 3, "a"}, {0, 1, "b"}}),
                    BackendError);
}

TEST_CASE("align joins overlapping transcript text") {
    const std::vector<TranscriptSegment> t{{0, 2, "hello there"}, {2, 5, "see you"}};
    const std::vector<TimeSpan> anchors{{1.5, 3.0}, {5.5, 6.0}, {2.0, 3.0}, {0.0, 1.0}};
    const auto texts = align(anchors, t);
    CHECK(texts[0] == "hello there see you");
    CHECK(texts[1].empty());
    CHECK(texts[2] == "see you");
    CHECK(texts[3] == "hello there");
}

TEST_CASE("align keeps transcript order for disjoint anchors") {
    std::vector<TranscriptSegment> t;
    for (int i = 0; i < 20; ++i) t.push_back({i * 1.0, i + 0.8, "w" + std::to_string(i)});
    const std::vector<TimeSpan> anchors{{0.5, 4.2}, {6.0, 6.5}, {9.5, 15.1}};
    const auto texts = align(anchors, t);
    CHECK(texts[0] == "w0 w1 w2 w3 w4");
    CHECK(texts[1] == "w6");
    CHECK(texts[2] == "w9 w10 w11 w12 w13 w14 w15");
}

TEST_CASE("base64 codec") {
    const std::vector<std::uint8_t> bytes{'f', 'o', 'o', 'b', 'a'};
    CHECK(base64_encode(bytes) == "Zm9vYmE=");
    CHECK(base64_decode("Zm9vYmE=") == bytes);
    CHECK(base64_decode("") .empty());
    CHECK_THROWS_AS(base64_decode("abc"), InputError);
    CHECK(sha256_hex(std::vector<std::uint8_t>{}) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
