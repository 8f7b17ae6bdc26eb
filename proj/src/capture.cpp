#include "visca/capture.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <array>
#include <cstring>
#include <random>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "visca/errors.hpp"

namespace visca {

using nlohmann::json;

namespace {

class Socket {
public:
    Socket(const std::string& host, int port, std::chrono::seconds timeout) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
            throw ProviderUnavailable("cannot resolve " + host);
        }
        for (auto* ai = res; ai; ai = ai->ai_next) {
            fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd_ < 0) continue;
            if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
            ::close(fd_);
            fd_ = -1;
        }
        freeaddrinfo(res);
        if (fd_ < 0) throw ProviderUnavailable("cannot connect to DevTools at " + host + ":" + std::to_string(port));
        timeval tv{};
        tv.tv_sec = static_cast<long>(timeout.count());
        setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    }
    ~Socket() {
        if (fd_ >= 0) ::close(fd_);
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    void send_all(const void* data, std::size_t n) {
        const auto* p = static_cast<const char*>(data);
        while (n > 0) {
            const auto w = ::send(fd_, p, n, MSG_NOSIGNAL);
            if (w <= 0) throw ProviderUnavailable("DevTools connection lost while sending");
            p += w;
            n -= static_cast<std::size_t>(w);
        }
    }

    void read_exact(void* data, std::size_t n) {
        auto* p = static_cast<char*>(data);
        while (n > 0) {
            if (!buffer_.empty()) {
                const auto k = std::min(n, buffer_.size());
                std::memcpy(p, buffer_.data(), k);
                buffer_.erase(0, k);
                p += k;
                n -= k;
                continue;
            }
            const auto r = ::recv(fd_, p, n, 0);
            if (r <= 0) throw ProviderUnavailable("DevTools connection closed or timed out");
            p += r;
            n -= static_cast<std::size_t>(r);
        }
    }

    // Reads through the end of the HTTP header block.
    std::string read_headers() {
        std::string data;
        std::array<char, 4096> chunk{};
        for (;;) {
            const auto pos = data.find("\r\n\r\n");
            if (pos != std::string::npos) {
                buffer_ = data.substr(pos + 4);
                return data.substr(0, pos);
            }
            const auto r = ::recv(fd_, chunk.data(), chunk.size(), 0);
            if (r <= 0) throw ProviderUnavailable("DevTools closed the connection during the handshake");
            data.append(chunk.data(), static_cast<std::size_t>(r));
        }
    }

    std::string read_rest() {
        std::string data = std::move(buffer_);
        buffer_.clear();
        std::array<char, 4096> chunk{};
        for (;;) {
            const auto r = ::recv(fd_, chunk.data(), chunk.size(), 0);
            if (r <= 0) return data;
            data.append(chunk.data(), static_cast<std::size_t>(r));
        }
    }

private:
    int fd_ = -1;
    std::string buffer_;
};

std::string http_request(const CaptureOptions& o, const std::string& method, const std::string& target) {
    Socket s(o.devtools_host, o.devtools_port, o.timeout);
    const std::string req = method + " " + target + " HTTP/1.1\r\nHost: " + o.devtools_host + ":" +
                            std::to_string(o.devtools_port) + "\r\nConnection: close\r\n\r\n";
    s.send_all(req.data(), req.size());
    const auto head = s.read_headers();
    if (head.find(" 200") == std::string::npos) {
        throw ProviderProtocolError("DevTools " + target + ": " + head.substr(0, head.find("\r\n")));
    }
    return s.read_rest();
}

std::string url_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == ':' || c == '/') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& in) {
    std::vector<std::uint8_t> out(3 * (in.size() / 4) + 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(in.data()),
                                  static_cast<int>(in.size()));
    if (n < 0) throw ProviderProtocolError("screenshot is not valid base64");
    std::size_t len = static_cast<std::size_t>(n);
    for (auto it = in.rbegin(); it != in.rend() && *it == '=' && len > 0; ++it) --len;
    out.resize(len);
    return out;
}

// RFC 6455 client carrying DevTools JSON messages.
class DevToolsSession {
public:
    DevToolsSession(const CaptureOptions& o, const std::string& ws_url) : opts_(o), sock_(host_of(o), port_of(o), o.timeout) {
        const auto path_start = ws_url.find('/', ws_url.find("//") + 2);
        const std::string path = path_start == std::string::npos ? "/" : ws_url.substr(path_start);
        const std::string req = "GET " + path + " HTTP/1.1\r\nHost: " + o.devtools_host + ":" +
                                std::to_string(o.devtools_port) +
                                "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                                "Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\nSec-WebSocket-Version: 13\r\n\r\n";
        sock_.send_all(req.data(), req.size());
        const auto head = sock_.read_headers();
        if (head.find(" 101") == std::string::npos) {
            throw ProviderProtocolError("WebSocket upgrade refused: " + head.substr(0, head.find("\r\n")));
        }
    }

    json call(const std::string& method, json params = json::object()) {
        const int id = ++next_id_;
        send_text(json({{"id", id}, {"method", method}, {"params", std::move(params)}}).dump());
        for (;;) {
            auto msg = json::parse(receive_text());
            if (msg.contains("method")) events_.push_back(std::move(msg));
            if (msg.value("id", 0) != id) continue;
            if (msg.contains("error")) throw ProviderProtocolError(method + ": " + msg.at("error").dump());
            return msg.value("result", json::object());
        }
    }

    void wait_event(const std::string& method) {
        for (const auto& e : events_) {
            if (e.value("method", "") == method) return;
        }
        for (;;) {
            auto msg = json::parse(receive_text());
            if (msg.value("method", "") == method) return;
        }
    }

private:
    static const std::string& host_of(const CaptureOptions& o) { return o.devtools_host; }
    static int port_of(const CaptureOptions& o) { return o.devtools_port; }

    void send_frame(std::uint8_t opcode, const std::string& payload) {
        std::string frame;
        frame += static_cast<char>(0x80 | opcode);
        const auto n = payload.size();
        if (n < 126) {
            frame += static_cast<char>(0x80 | n);
        } else if (n < 65536) {
            frame += static_cast<char>(0x80 | 126);
            frame += static_cast<char>((n >> 8) & 0xFF);
            frame += static_cast<char>(n & 0xFF);
        } else {
            frame += static_cast<char>(0x80 | 127);
            for (int i = 7; i >= 0; --i) frame += static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xFF);
        }
        std::array<std::uint8_t, 4> mask{};
        for (auto& m : mask) m = static_cast<std::uint8_t>(rng_());
        frame.append(reinterpret_cast<const char*>(mask.data()), mask.size());
        for (std::size_t i = 0; i < n; ++i) frame += static_cast<char>(payload[i] ^ mask[i % 4]);
        sock_.send_all(frame.data(), frame.size());
    }

    void send_text(const std::string& s) { send_frame(0x1, s); }

    std::string receive_text() {
        std::string message;
        for (;;) {
            std::array<std::uint8_t, 2> h{};
            sock_.read_exact(h.data(), 2);
            const bool fin = h[0] & 0x80;
            const std::uint8_t opcode = h[0] & 0x0F;
            std::uint64_t len = h[1] & 0x7F;
            if (len == 126) {
                std::array<std::uint8_t, 2> e{};
                sock_.read_exact(e.data(), 2);
                len = (static_cast<std::uint64_t>(e[0]) << 8) | e[1];
            } else if (len == 127) {
                std::array<std::uint8_t, 8> e{};
                sock_.read_exact(e.data(), 8);
                len = 0;
                for (auto b : e) len = (len << 8) | b;
            }
            std::array<std::uint8_t, 4> mask{};
            const bool masked = h[1] & 0x80;
            if (masked) sock_.read_exact(mask.data(), 4);
            std::string payload(static_cast<std::size_t>(len), '\0');
            if (len) sock_.read_exact(payload.data(), payload.size());
            if (masked) {
                for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ mask[i % 4]);
            }
            if (opcode == 0x8) throw ProviderUnavailable("DevTools closed the WebSocket");
            if (opcode == 0x9) {
                send_frame(0xA, payload);
                continue;
            }
            if (opcode == 0xA) continue;
            message += payload;
            if (fin) return message;
        }
    }

    const CaptureOptions& opts_;
    Socket sock_;
    int next_id_ = 0;
    std::vector<json> events_;
    std::mt19937 rng_{std::random_device{}()};
};

}  // namespace

const std::string& capture_collector_script() {
    static const std::string script = R"JS((() => {
  const skip = new Set(['SCRIPT', 'STYLE', 'NOSCRIPT', 'TEMPLATE', 'HEAD']);
  const nodes = [];
  let next = 0;
  const r = (v) => Math.floor(v + 0.5);
  const walk = (el, parentId) => {
    if (skip.has(el.tagName)) return;
    const id = 'n' + (next++);
    const attrs = {};
    for (const a of el.attributes) attrs[a.name] = a.value;
    let text = '';
    for (const c of el.childNodes) if (c.nodeType === 3) text += c.nodeValue;
    text = text.replace(/\s+/g, ' ').trim();
    const b = el.getBoundingClientRect();
    const st = getComputedStyle(el);
    const x = r(b.left + scrollX), y = r(b.top + scrollY), w = r(b.width), h = r(b.height);
    const visible = w > 0 && h > 0 && st.visibility !== 'hidden' && st.display !== 'none';
    nodes.push({id, parent_id: parentId, tag: el.tagName.toLowerCase(), attrs,
                text: text.length ? text : null, bbox: {x, y, w, h}, visible});
    for (const c of el.children) walk(c, id);
  };
  walk(document.documentElement, null);
  const doctype = document.doctype ? '<!DOCTYPE ' + document.doctype.name + '>\n' : '';
  return {nodes, html: doctype + document.documentElement.outerHTML,
          width: Math.max(document.documentElement.scrollWidth, innerWidth),
          height: Math.max(document.documentElement.scrollHeight, innerHeight)};
})())JS";
    return script;
}

PageSnapshot capture_page(const CaptureOptions& opts) {
    if (opts.url.empty()) throw InputError("capture: --url is required");
    json target;
    try {
        target = json::parse(http_request(opts, "PUT", "/json/new?" + url_encode("about:blank")));
    } catch (const ProviderProtocolError&) {
        target = json::parse(http_request(opts, "GET", "/json/new?" + url_encode("about:blank")));
    } catch (const json::parse_error& e) {
        throw ProviderProtocolError(std::string("DevTools /json/new: ") + e.what());
    }
    const auto ws_url = target.value("webSocketDebuggerUrl", std::string{});
    if (ws_url.empty()) throw ProviderProtocolError("DevTools target has no webSocketDebuggerUrl");

    json collected;
    std::string png_b64;
    try {
        DevToolsSession s(opts, ws_url);
        s.call("Page.enable");
        s.call("Emulation.setDeviceMetricsOverride", {{"width", opts.viewport_width},
                                                      {"height", opts.viewport_height},
                                                      {"deviceScaleFactor", 1},
                                                      {"mobile", false}});
        s.call("Page.navigate", {{"url", opts.url}});
        s.wait_event("Page.loadEventFired");
        const auto eval = s.call("Runtime.evaluate", {{"expression", capture_collector_script()},
                                                      {"returnByValue", true},
                                                      {"awaitPromise", false}});
        if (eval.contains("exceptionDetails")) {
            throw ProviderProtocolError("collector script failed: " + eval.at("exceptionDetails").dump());
        }
        collected = eval.at("result").at("value");
        const int w = collected.at("width").get<int>();
        const int h = collected.at("height").get<int>();
        const auto shot = s.call("Page.captureScreenshot",
                                 {{"format", "png"},
                                  {"captureBeyondViewport", true},
                                  {"clip", {{"x", 0}, {"y", 0}, {"width", w}, {"height", h}, {"scale", 1}}}});
        png_b64 = shot.at("data").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderProtocolError(std::string("DevTools reply: ") + e.what());
    }
    try {
        http_request(opts, "GET", "/json/close/" + target.value("id", std::string{}));
    } catch (const Error&) {
        // tab cleanup is best-effort
    }

    json manifest = {{"url", opts.url},
                     {"viewport", {{"width", opts.viewport_width}, {"height", opts.viewport_height}}},
                     {"nodes", collected.at("nodes")}};
    return snapshot_from_json(manifest, collected.at("html").get<std::string>(), decode_png(base64_decode(png_b64)));
}

}  // namespace visca
