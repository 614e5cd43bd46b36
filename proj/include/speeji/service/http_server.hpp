#pragma once

#include "speeji/service/message_service.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace speeji::service {

inline constexpr std::size_t kMaxRequestBytes = 128u << 20;

/// HTTP + WebSocket front end for a MessageService.
///
///   POST /api/conversations                      {title} -> conversation
///   GET  /api/conversations                      -> [conversation]
///   GET  /api/conversations/{cid}/messages       ?since=<rfc3339>
///   POST /api/conversations/{cid}/messages       multipart: audio, sender
///   GET  /api/messages/{mid}
///   GET  /api/messages/{mid}/audio               audio/wav
///   GET  /api/messages/{mid}/waveform.svg        ?width=&height=&segments=0|1
///   GET  /api/ws?conversation={cid}              WebSocket event stream
///
/// Errors are JSON {"error":{"status":..,"message":..}}. One thread per
/// connection; the service does the heavy lifting on its own workers.
class HttpServer {
public:
    HttpServer(MessageService& service, const std::string& host, std::uint16_t port);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Bound port (useful with port 0).
    std::uint16_t port() const noexcept;
    std::string address() const;

    /// Closes the listener and every open connection, then joins.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace speeji::service
