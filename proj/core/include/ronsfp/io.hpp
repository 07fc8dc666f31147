#ifndef RONSFP_IO_HPP
#define RONSFP_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ronsfp {

/// Round-trippable decimal rendering (17 significant digits), so reruns with
/// the same seed produce byte-identical files.
std::string format_double(double v);

/// RFC 4180 cell quoting: wraps and escapes only when the cell needs it.
std::string csv_quote(const std::string& cell);

/// Accumulates a CSV document in memory; rows must match the header width.
class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header);
    void row(std::span<const double> values);
    const std::string& text() const { return text_; }

private:
    std::string text_;
    std::size_t columns_;
};

/// Writes through a temp file in the target directory, then renames over the
/// destination, so readers never observe a partial file. Creates parent
/// directories as needed.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

} // namespace ronsfp

#endif
