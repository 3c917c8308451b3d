#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace implab::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kHypothesis = 3, kNonConvergence = 4 };

struct Options {
  std::string subcommand;  // validate | fixed-points | fatou | lavaurs | implode | trace | curve | render
  std::string mode;        // render only: basin | convergence | fatou-phase (overrides render.mode)
  std::filesystem::path config;
  std::filesystem::path out;
  int threads = 1;
};

const std::vector<std::string>& subcommands();

// never throws; every failure is mapped onto an exit code, with a diagnostic file where possible
int run(const Options& opt, std::ostream& log);
int run(const Options& opt, const nlohmann::json& config, std::ostream& log);

// ------------------------------------------------------------ artifact plumbing

std::string format_double(double v);  // %.17g, "nan" / "inf" / "-inf"
std::string csv_field(const std::string& s);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& row(std::vector<std::string> cells);
  size_t rows() const { return body_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> body_;
};

struct Rgb {
  std::uint8_t r, g, b;
  bool operator==(const Rgb&) const = default;
};

struct Image {
  int width = 0, height = 0;
  std::vector<Rgb> pixels;  // row-major, top-left origin
  std::vector<std::string> comments;
  Rgb at(int col, int row) const { return pixels[size_t(row) * width + col]; }
};

std::string encode_ppm(const Image& img);
Image decode_ppm(const std::string& bytes);

// temp file in the same directory, then rename
void write_atomic(const std::filesystem::path& path, const std::string& bytes);

// render palette, also written into the PPM header
inline constexpr Rgb kInside{30, 90, 200}, kEscaped{240, 240, 240}, kUnknown{200, 30, 30}, kFailed{0, 0, 0};
Rgb log_error_color(double log10_err);  // viridis-like ramp over [-12, 0]

}  // namespace implab::cli
