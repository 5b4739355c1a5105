#pragma once

#include <string>
#include <vector>

namespace hessae::warnings {

/// Emits a non-fatal diagnostic. Goes to stderr unless a Capture is active.
void emit(const std::string& message);

/// RAII scope that collects warnings instead of printing them.
class Capture {
public:
    Capture();
    ~Capture();
    Capture(const Capture&) = delete;
    Capture& operator=(const Capture&) = delete;

    std::vector<std::string> messages() const;
    bool contains(const std::string& substring) const;
};

}  // namespace hessae::warnings
