#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include "visca/snapshot.hpp"

namespace visca {

struct CaptureOptions {
    std::string url;
    std::string devtools_host = "127.0.0.1";
    int devtools_port = 9222;
    int viewport_width = 1280;
    int viewport_height = 800;
    std::chrono::seconds timeout{30};
};

// Drives an already running Chromium (--remote-debugging-port) over the
// DevTools protocol: opens a tab, loads the page, collects the element
// table with a script and takes a full-page screenshot. Connection
// failures raise ProviderUnavailable; protocol errors ProviderProtocolError.
PageSnapshot capture_page(const CaptureOptions& opts);

// The element collector evaluated in the page (exposed for tests).
const std::string& capture_collector_script();

}  // namespace visca
