#include "speeji/service/store.hpp"

#include "speeji/codec.hpp"
#include "speeji/errors.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

namespace speeji::service {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_fail(const std::string& what, const fs::path& p) {
    throw std::runtime_error(fmt::format("{} {}: {}", what, p.string(), std::strerror(errno)));
}

void write_all(int fd, const void* data, std::size_t size, const fs::path& p) {
    const auto* bytes = static_cast<const char*>(data);
    while (size > 0) {
        const ssize_t n = ::write(fd, bytes, size);
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("write", p);
        }
        bytes += n;
        size -= static_cast<std::size_t>(n);
    }
}

void fsync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

bool valid_ref(const std::string& ref) {
    return ref.size() == 64 &&
           ref.find_first_not_of("0123456789abcdef") == std::string::npos;
}

}  // namespace

Store::Store(fs::path data_dir) : root_(std::move(data_dir)) {
    fs::create_directories(root_ / "audio");
    fs::create_directories(root_ / "conversations");
}

fs::path Store::audio_path(const std::string& ref) const {
    if (!valid_ref(ref)) throw InputError(fmt::format("invalid audio ref \"{}\"", ref));
    return root_ / "audio" / (ref + ".wav");
}

bool Store::has_audio(const std::string& ref) const {
    std::error_code ec;
    return valid_ref(ref) && fs::is_regular_file(audio_path(ref), ec);
}

std::string Store::put_audio(std::span<const std::uint8_t> canonical_wav) {
    const std::string ref = sha256_hex(canonical_wav);
    const fs::path final_path = audio_path(ref);
    std::lock_guard lock(audio_mutex_);
    if (fs::exists(final_path)) return ref;

    const fs::path tmp = final_path.string() + fmt::format(".tmp{}", ::getpid());
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("open", tmp);
    try {
        write_all(fd, canonical_wav.data(), canonical_wav.size(), tmp);
        if (::fsync(fd) != 0) io_fail("fsync", tmp);
    } catch (...) {
        ::close(fd);
        fs::remove(tmp);
        throw;
    }
    ::close(fd);
    fs::rename(tmp, final_path);
    fsync_dir(final_path.parent_path());
    return ref;
}

std::vector<std::uint8_t> Store::read_audio(const std::string& ref) const {
    const fs::path p = audio_path(ref);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot read {}", p.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void Store::append_line(const std::string& conversation_id, const std::string& line) {
    const fs::path p = root_ / "conversations" / (conversation_id + ".jsonl");
    const bool fresh = !fs::exists(p);
    const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("open", p);
    try {
        const std::string record = line + "\n";
        write_all(fd, record.data(), record.size(), p);
        if (::fsync(fd) != 0) io_fail("fsync", p);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    if (fresh) fsync_dir(p.parent_path());
}

void Store::append_conversation(const Conversation& c) {
    nlohmann::ordered_json j;
    j["kind"] = "conversation";
    j["conversation_id"] = c.conversation_id;
    j["title"] = c.title;
    j["created_at"] = format_rfc3339(c.created_at);
    append_line(c.conversation_id, j.dump());
}

void Store::append_message(const VoiceMessage& m) {
    nlohmann::ordered_json j;
    j["kind"] = "message";
    j["message_id"] = m.message_id;
    j["sender"] = m.sender;
    j["created_at"] = format_rfc3339(m.created_at);
    j["audio_ref"] = m.audio_ref;
    append_line(m.conversation_id, j.dump());
}

void Store::append_result(const std::string& conversation_id, const std::string& message_id,
                          const AugmentationDescriptor& d) {
    nlohmann::ordered_json j;
    j["kind"] = "result";
    j["message_id"] = message_id;
    j["status"] = to_string(d.status);
    std::string line = j.dump();
    line.pop_back();
    line += ",\"descriptor\":" + to_json(d) + "}";
    append_line(conversation_id, line);
}

std::vector<Store::Replayed> Store::replay() const {
    std::vector<Replayed> out;
    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(root_ / "conversations")) {
        if (entry.path().extension() == ".jsonl") logs.push_back(entry.path());
    }
    std::sort(logs.begin(), logs.end());

    for (const auto& path : logs) {
        std::ifstream in(path);
        std::string line;
        Replayed r;
        bool have_header = false;
        std::map<std::string, std::size_t> index;

        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("kind")) {
                ++r.skipped_records;  // torn tail from an interrupted append
                continue;
            }
            try {
                const std::string kind = j.at("kind");
                if (kind == "conversation") {
                    r.conversation.conversation_id = j.at("conversation_id");
                    r.conversation.title = j.at("title");
                    auto ts = parse_rfc3339(j.at("created_at").get<std::string>());
                    if (!ts) throw std::runtime_error("bad timestamp");
                    r.conversation.created_at = *ts;
                    have_header = true;
                } else if (kind == "message") {
                    VoiceMessage m;
                    m.message_id = j.at("message_id");
                    m.conversation_id = r.conversation.conversation_id;
                    m.sender = j.at("sender");
                    auto ts = parse_rfc3339(j.at("created_at").get<std::string>());
                    if (!ts) throw std::runtime_error("bad timestamp");
                    m.created_at = *ts;
                    m.audio_ref = j.at("audio_ref");
                    if (!has_audio(m.audio_ref)) {
                        ++r.missing_audio;
                        continue;
                    }
                    index[m.message_id] = r.messages.size();
                    r.messages.push_back(std::move(m));
                } else if (kind == "result") {
                    auto it = index.find(j.at("message_id").get<std::string>());
                    if (it == index.end()) continue;
                    auto d = std::make_shared<const AugmentationDescriptor>(
                        descriptor_from_json(j.at("descriptor").dump()));
                    auto& m = r.messages[it->second];
                    m.status = from_augmentation(d->status);
                    m.descriptor = std::move(d);
                } else {
                    ++r.skipped_records;
                }
            } catch (const std::exception&) {
                ++r.skipped_records;
            }
        }
        if (!have_header) continue;
        for (auto& m : r.messages) m.conversation_id = r.conversation.conversation_id;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace speeji::service
