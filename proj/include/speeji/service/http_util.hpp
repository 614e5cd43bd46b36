#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace speeji::service {

struct FormPart {
    std::string name;
    std::string filename;
    std::string content_type;
    std::string data;
};

/// Parses a multipart/form-data body. `content_type` is the request header
/// value carrying the boundary. Throws ServiceError(BadRequest) when malformed.
std::vector<FormPart> parse_multipart(std::string_view content_type, std::string_view body);

/// Percent-decodes a URL component. '+' is kept literally so RFC 3339 offsets
/// survive unencoded. Throws ServiceError(BadRequest) on bad escapes.
std::string percent_decode(std::string_view s);

struct Target {
    std::string path;
    std::map<std::string, std::string> query;
};

Target parse_target(std::string_view target);

}  // namespace speeji::service
