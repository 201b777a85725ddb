#include "degcz/core.hpp"

#include <iostream>
#include <mutex>

namespace degcz {

namespace {
std::mutex g_warn_mutex;
WarningHandler g_handler;
}  // namespace

void set_warning_handler(WarningHandler handler) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    g_handler = std::move(handler);
}

void warn(std::string_view message) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    if (g_handler) {
        g_handler(message);
        return;
    }
    std::cerr << "warning: " << message << '\n';
}

}  // namespace degcz
