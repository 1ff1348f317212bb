#include "ivnsim/diagnostics.hpp"

#include <algorithm>

namespace ivnsim {

void Diagnostics::error(std::string message, SourcePos pos)
{
    items_.push_back(Diagnostic{Diagnostic::Severity::Error, std::move(message), pos});
}

void Diagnostics::warning(std::string message, SourcePos pos)
{
    items_.push_back(Diagnostic{Diagnostic::Severity::Warning, std::move(message), pos});
}

void Diagnostics::append(const Diagnostics& other)
{
    items_.insert(items_.end(), other.items_.begin(), other.items_.end());
}

bool Diagnostics::has_errors() const noexcept
{
    return error_count() > 0;
}

std::size_t Diagnostics::error_count() const noexcept
{
    return static_cast<std::size_t>(std::count_if(items_.begin(), items_.end(), [](const Diagnostic& d) {
        return d.severity == Diagnostic::Severity::Error;
    }));
}

namespace {

void format_one(std::string& out, std::string_view file, const Diagnostic& d)
{
    out += file;
    if (d.pos.line > 0) {
        out += ':' + std::to_string(d.pos.line) + ':' + std::to_string(d.pos.column);
    }
    out += d.severity == Diagnostic::Severity::Error ? ": error: " : ": warning: ";
    out += d.message;
    out += '\n';
}

} // namespace

std::string Diagnostics::format(std::string_view file) const
{
    std::string out;
    for (const auto& d : items_) {
        format_one(out, file, d);
    }
    return out;
}

std::string Diagnostics::format(const std::vector<std::string>& files) const
{
    std::string out;
    for (const auto& d : items_) {
        const bool known = d.pos.file >= 0 && static_cast<std::size_t>(d.pos.file) < files.size();
        format_one(out, known ? std::string_view(files[static_cast<std::size_t>(d.pos.file)]) : "<input>", d);
    }
    return out;
}

} // namespace ivnsim
