#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ivnsim {

struct SourcePos {
    int line = 0; // 1-based; 0 when unknown
    int column = 0;
    int file = 0; // index into the list of input files

    friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string message;
    SourcePos pos{};
};

class Diagnostics {
public:
    void error(std::string message, SourcePos pos = {});
    void warning(std::string message, SourcePos pos = {});
    void append(const Diagnostics& other);

    [[nodiscard]] bool has_errors() const noexcept;
    [[nodiscard]] std::size_t error_count() const noexcept;
    [[nodiscard]] const std::vector<Diagnostic>& items() const noexcept { return items_; }
    [[nodiscard]] bool empty() const noexcept { return items_.empty(); }

    /// "file:line:col: error: message" per item, one per line.
    [[nodiscard]] std::string format(std::string_view file) const;
    /// Same, naming the file by `pos.file`.
    [[nodiscard]] std::string format(const std::vector<std::string>& files) const;

private:
    std::vector<Diagnostic> items_;
};

} // namespace ivnsim
