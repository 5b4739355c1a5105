#include "hessae/warnings.hpp"

#include <iostream>
#include <mutex>

namespace hessae::warnings {

namespace {
std::mutex g_mutex;
std::vector<std::vector<std::string>*> g_captures;
}  // namespace

void emit(const std::string& message) {
    std::lock_guard lock(g_mutex);
    if (!g_captures.empty()) {
        g_captures.back()->push_back(message);
        return;
    }
    std::cerr << "[warn] " << message << "\n";
}

namespace {
// One sink per live Capture, stacked so nested captures behave sanely.
thread_local std::vector<std::string>* t_own = nullptr;
}  // namespace

Capture::Capture() {
    std::lock_guard lock(g_mutex);
    t_own = new std::vector<std::string>();
    g_captures.push_back(t_own);
}

Capture::~Capture() {
    std::lock_guard lock(g_mutex);
    if (!g_captures.empty()) {
        delete g_captures.back();
        g_captures.pop_back();
    }
    t_own = nullptr;
}

std::vector<std::string> Capture::messages() const {
    std::lock_guard lock(g_mutex);
    if (g_captures.empty()) return {};
    return *g_captures.back();
}

bool Capture::contains(const std::string& substring) const {
    for (const auto& m : messages()) {
        if (m.find(substring) != std::string::npos) return true;
    }
    return false;
}

}  // namespace hessae::warnings
