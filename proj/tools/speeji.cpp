#include "speeji/audio.hpp"
#include "speeji/backends.hpp"
#include "speeji/codec.hpp"
#include "speeji/errors.hpp"
#include "speeji/pipeline.hpp"
#include "speeji/render.hpp"
#include "speeji/service/http_server.hpp"
#include "speeji/service/message_service.hpp"

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

namespace fs = std::filesystem;
using namespace speeji;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitFailed = 3;

// One JSON object per line on stderr.
int fail(std::string_view kind, std::string_view message, std::string_view path = {}) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["message"] = message;
    if (!path.empty()) j["path"] = path;
    std::cerr << j.dump() << '\n';
    return kExitInput;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot read {}", path));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes to stdout for "-" or empty, otherwise to a temp file renamed into
// place so a failed run never leaves a partial file.
void write_output(const std::string& out, std::string_view content) {
    if (out.empty() || out == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    const fs::path target(out);
    const fs::path tmp = target.parent_path() / fmt::format(".{}.{}.tmp", target.filename().string(), ::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw InputError(fmt::format("cannot write {}", out));
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw InputError(fmt::format("cannot write {}", out));
        }
    }
    fs::rename(tmp, target);
}

struct BackendFlags {
    std::string backend;
    std::string url;
    std::string asr_url;
    double timeout_s = 30.0;
    int retries = 1;

    void add(CLI::App& cmd) {
        cmd.add_option("--backend", backend, "SER backend: baseline or external")
            ->check(CLI::IsMember({"baseline", "external"}));
        cmd.add_option("--url", url, "External SER base URL, e.g. http://127.0.0.1:9000");
        cmd.add_option("--asr-url", asr_url, "Optional transcription base URL");
        cmd.add_option("--timeout", timeout_s, "Backend request timeout in seconds");
        cmd.add_option("--retries", retries, "Retries after a transport or 5xx failure");
    }

    void apply(BackendConfig& ser, std::optional<BackendConfig>& asr) const {
        if (backend == "baseline") ser.kind = BackendConfig::Kind::Baseline;
        if (backend == "external") ser.kind = BackendConfig::Kind::External;
        if (!url.empty()) ser.endpoint_url = url;
        ser.timeout_s = timeout_s;
        ser.retry_count = retries;
        if (!asr_url.empty()) {
            asr = BackendConfig{};
            asr->kind = BackendConfig::Kind::External;
            asr->endpoint_url = asr_url;
        }
        if (asr) {
            asr->timeout_s = timeout_s;
            asr->retry_count = retries;
        }
    }
};

struct AnalyzeArgs {
    std::string input;
    std::string table;
    std::string out;
    std::string message_id;
    AugmentOptions options;
    BackendFlags backend;
};

int run_analyze(const AnalyzeArgs& a) {
    const auto table = a.table.empty() ? EmojiTable::builtin() : EmojiTable::load(a.table);
    a.options.validate();
    BackendConfig ser;
    std::optional<BackendConfig> asr;
    a.backend.apply(ser, asr);
    ser.validate();
    if (asr) asr->validate();

    // Analyze the canonical 16 kHz PCM16 form, exactly what the service stores.
    const auto canonical = encode_wav(decode_wav(read_file(a.input)));
    const AudioClip clip = decode_wav(canonical);
    const std::string id = a.message_id.empty() ? "m" + sha256_hex(canonical).substr(0, 24) : a.message_id;

    std::unique_ptr<SerBackend> backend;
    if (ser.kind == BackendConfig::Kind::External) {
        backend = std::make_unique<ExternalSerBackend>(ser);
    } else {
        backend = std::make_unique<BaselineBackend>();
    }
    std::unique_ptr<Transcriber> transcriber;
    if (asr) transcriber = std::make_unique<ExternalTranscriber>(*asr);

    const auto d = augment(clip, table, *backend, transcriber.get(), a.options, id);
    write_output(a.out, to_json(d) + "\n");
    if (d.status == AugmentationStatus::AugmentationFailed) {
        nlohmann::ordered_json j;
        j["error"] = "augmentation_failed";
        j["message"] = d.failure_reason;
        std::cerr << j.dump() << '\n';
        return kExitFailed;
    }
    return kExitOk;
}

struct RenderArgs {
    std::string input;
    std::string out;
    RenderOptions options;
    int segments = 0;
};

int run_render(RenderArgs a) {
    const auto bytes = read_file(a.input);
    const auto d = descriptor_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    a.options.show_segments = a.segments == 1;
    write_output(a.out, render_svg(d, a.options));
    return kExitOk;
}

int run_table_check(const std::string& path) {
    const auto table = EmojiTable::load(path);
    const auto e = table.entries();
    const auto [vmin, vmax] = std::minmax_element(e.begin(), e.end(), [](auto& x, auto& y) { return x.valence < y.valence; });
    const auto [amin, amax] = std::minmax_element(e.begin(), e.end(), [](auto& x, auto& y) { return x.arousal < y.arousal; });
    std::cout << fmt::format("{} entries\nvalence [{:.3f}, {:.3f}]\narousal [{:.3f}, {:.3f}]\n", table.size(),
                             vmin->valence, vmax->valence, amin->arousal, amax->arousal);
    return kExitOk;
}

struct ServeArgs {
    std::string data_dir;
    std::string host = "127.0.0.1";
    std::optional<int> port;
    std::string table;
    std::optional<double> neutral_tau;
    std::optional<double> interest_tau;
    std::size_t workers = 4;
    BackendFlags backend;
};

int run_serve(const ServeArgs& a) {
    service::ServiceConfig cfg = service::ServiceConfig::from_env();
    if (!a.data_dir.empty()) cfg.data_dir = a.data_dir;
    if (!a.table.empty()) cfg.table = std::make_shared<const EmojiTable>(EmojiTable::load(a.table));
    if (a.neutral_tau) cfg.augment.neutral_tau = *a.neutral_tau;
    if (a.interest_tau) cfg.augment.interest_tau = *a.interest_tau;
    cfg.workers = a.workers;
    a.backend.apply(cfg.ser, cfg.asr);

    int port = 8080;
    if (const char* env = std::getenv("SPEEJI_PORT"); env != nullptr && *env != '\0') {
        try {
            port = std::stoi(env);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("SPEEJI_PORT={} is not a port number", env));
        }
    }
    if (a.port) port = *a.port;
    if (port < 0 || port > 65535) throw ConfigError(fmt::format("port {} out of range", port));

    // Block termination signals before any thread starts so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGTERM);
    sigaddset(&signals, SIGINT);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::MessageService svc(cfg);
    service::HttpServer server(svc, a.host, static_cast<std::uint16_t>(port));
    const auto& rec = svc.recovery();
    std::cerr << fmt::format("speeji: recovered {} conversations, {} messages, {} re-enqueued\n", rec.conversations,
                             rec.messages, rec.requeued);
    std::cout << "listening on " << server.address() << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << fmt::format("speeji: signal {}, draining\n", sig);
    server.stop();
    const bool drained = svc.shutdown(std::chrono::seconds(10));
    if (!drained) std::cerr << "speeji: drain deadline reached; unfinished messages resume on next start\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speech emotion augmentation for voice messages"};
    app.require_subcommand(1);

    AnalyzeArgs analyze;
    auto* cmd_analyze = app.add_subcommand("analyze", "Analyze a WAV file and write its descriptor JSON");
    cmd_analyze->add_option("input", analyze.input, "Input WAV file")->required();
    cmd_analyze->add_option("--table", analyze.table, "Emoji table JSON (default: built-in table)");
    cmd_analyze->add_option("--out", analyze.out, "Output path (default: stdout)");
    cmd_analyze->add_option("--chunk-s", analyze.options.chunk_s, "Chunk length in seconds");
    cmd_analyze->add_option("--neutral-tau", analyze.options.neutral_tau, "Neutral threshold on |(v,a)|");
    cmd_analyze->add_option("--interest-tau", analyze.options.interest_tau, "Interest threshold on |(v,a)|");
    cmd_analyze->add_option("--message-id", analyze.message_id, "Message id (default: derived from the audio)");
    analyze.backend.add(*cmd_analyze);

    RenderArgs render;
    auto* cmd_render = app.add_subcommand("render", "Render a descriptor as an SVG waveform");
    cmd_render->add_option("descriptor", render.input, "Descriptor JSON file")->required();
    cmd_render->add_option("--width", render.options.width_px, "Width in pixels");
    cmd_render->add_option("--height", render.options.height_px, "Height in pixels");
    cmd_render->add_option("--segments", render.segments, "Draw interest-segment emojis (0 or 1)")
        ->check(CLI::Range(0, 1));
    cmd_render->add_option("--out", render.out, "Output path (default: stdout)");

    std::string table_path;
    auto* cmd_table = app.add_subcommand("table-check", "Validate an emoji table");
    cmd_table->add_option("table", table_path, "Emoji table JSON")->required();

    ServeArgs serve;
    auto* cmd_serve = app.add_subcommand("serve", "Run the message service (flags override SPEEJI_* variables)");
    cmd_serve->add_option("--data-dir", serve.data_dir, "Data directory");
    cmd_serve->add_option("--host", serve.host, "Listen address");
    cmd_serve->add_option("--port", serve.port, "Listen port; 0 picks a free one");
    cmd_serve->add_option("--table", serve.table, "Emoji table JSON");
    cmd_serve->add_option("--neutral-tau", serve.neutral_tau, "Neutral threshold");
    cmd_serve->add_option("--interest-tau", serve.interest_tau, "Interest threshold");
    cmd_serve->add_option("--workers", serve.workers, "Augmentation workers")->check(CLI::PositiveNumber);
    serve.backend.add(*cmd_serve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (cmd_analyze->parsed()) return run_analyze(analyze);
        if (cmd_render->parsed()) return run_render(render);
        if (cmd_table->parsed()) return run_table_check(table_path);
        if (cmd_serve->parsed()) return run_serve(serve);
    } catch (const SchemaError& e) {
        return fail("schema", e.what(), e.path());
    } catch (const DecodeError& e) {
        return fail("decode", e.what());
    } catch (const ConfigError& e) {
        return fail("config", e.what());
    } catch (const InputError& e) {
        return fail("input", e.what());
    } catch (const std::exception& e) {
        return fail("error", e.what());
    }
    return kExitInput;
}
