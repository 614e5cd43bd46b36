#include "speeji/service/http_util.hpp"

#include "speeji/service/types.hpp"

#include <cctype>

namespace speeji::service {

namespace {

[[noreturn]] void bad(const std::string& what) { throw ServiceError(ServiceError::Code::BadRequest, what); }

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

/// Value of `key` in a header like `form-data; name="audio"; filename="a.wav"`.
std::string header_param(std::string_view header, std::string_view key) {
    std::size_t pos = header.find(';');
    while (pos != std::string_view::npos) {
        std::string_view rest = header.substr(pos + 1);
        const std::size_t next = rest.find(';');
        std::string_view item = trim(rest.substr(0, next));
        const std::size_t eq = item.find('=');
        if (eq != std::string_view::npos && lower(trim(item.substr(0, eq))) == key) {
            std::string_view v = trim(item.substr(eq + 1));
            if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
            return std::string(v);
        }
        pos = next == std::string_view::npos ? next : pos + 1 + next;
    }
    return {};
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::vector<FormPart> parse_multipart(std::string_view content_type, std::string_view body) {
    if (lower(trim(content_type.substr(0, content_type.find(';')))) != "multipart/form-data") {
        bad("expected multipart/form-data");
    }
    const std::string boundary = header_param(content_type, "boundary");
    if (boundary.empty()) bad("multipart boundary missing");
    const std::string delim = "--" + boundary;

    std::size_t pos = body.find(delim);
    if (pos == std::string_view::npos) bad("multipart body has no parts");
    std::vector<FormPart> parts;
    for (;;) {
        pos += delim.size();
        if (body.substr(pos, 2) == "--") return parts;
        if (body.substr(pos, 2) != "\r\n") bad("malformed multipart delimiter");
        pos += 2;

        const std::size_t headers_end = body.find("\r\n\r\n", pos);
        if (headers_end == std::string_view::npos) bad("unterminated part headers");
        FormPart part;
        std::string_view headers = body.substr(pos, headers_end - pos);
        while (!headers.empty()) {
            const std::size_t eol = headers.find("\r\n");
            const std::string_view line = headers.substr(0, eol);
            headers = eol == std::string_view::npos ? std::string_view{} : headers.substr(eol + 2);
            const std::size_t colon = line.find(':');
            if (colon == std::string_view::npos) bad("malformed part header");
            const std::string key = lower(trim(line.substr(0, colon)));
            const std::string_view value = trim(line.substr(colon + 1));
            if (key == "content-disposition") {
                part.name = header_param(value, "name");
                part.filename = header_param(value, "filename");
            } else if (key == "content-type") {
                part.content_type = std::string(value);
            }
        }
        const std::size_t data_start = headers_end + 4;
        const std::size_t next = body.find("\r\n" + delim, data_start);
        if (next == std::string_view::npos) bad("unterminated multipart body");
        part.data = std::string(body.substr(data_start, next - data_start));
        parts.push_back(std::move(part));
        pos = next + 2;
    }
}

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out.push_back(s[i]);
            continue;
        }
        if (i + 2 >= s.size()) bad("truncated percent escape");
        const int hi = hex_value(s[i + 1]);
        const int lo = hex_value(s[i + 2]);
        if (hi < 0 || lo < 0) bad("bad percent escape");
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
    }
    return out;
}

Target parse_target(std::string_view target) {
    Target t;
    const std::size_t q = target.find('?');
    t.path = percent_decode(target.substr(0, q));
    if (q == std::string_view::npos) return t;
    std::string_view query = target.substr(q + 1);
    while (!query.empty()) {
        const std::size_t amp = query.find('&');
        const std::string_view item = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        if (item.empty()) continue;
        const std::size_t eq = item.find('=');
        t.query[percent_decode(item.substr(0, eq))] =
            eq == std::string_view::npos ? std::string{} : percent_decode(item.substr(eq + 1));
    }
    return t;
}

}  // namespace speeji::service
