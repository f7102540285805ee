#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "qcap/errors.hpp"
#include "qcap/matrix.hpp"
#include "qcap/optimizer.hpp"

namespace qcap {

// ---------------------------------------------------------------------------
// Number and matrix literals
//
// Matrices are written row-wise as {{a,b},{c,d}}. A complex entry is a real
// part optionally followed by a signed imaginary part ending in upper-case I,
// e.g. -3.1-4.5I; a lone imaginary part such as 0.5I is also accepted.
// ---------------------------------------------------------------------------

// Shortest decimal that reads back to the same double; locale independent.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_fixed(double v, int decimals) {
  std::array<char, 128> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, decimals);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_complex(Complex z) {
  std::string out = format_double(z.real());
  if (z.imag() != 0.0) {
    out += z.imag() < 0.0 ? '-' : '+';
    out += format_double(std::abs(z.imag()));
    out += 'I';
  }
  return out;
}

inline std::string format_matrix_literal(const ComplexMatrix& m) {
  std::string out = "{";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += ',';
    out += '{';
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_complex(m(i, j));
    }
    out += '}';
  }
  out += '}';
  return out;
}

namespace detail {

class LiteralScanner {
public:
  LiteralScanner(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  ComplexMatrix parse_matrix() {
    skip_ws();
    expect('{');
    std::vector<std::vector<Complex>> rows;
    std::vector<std::size_t> row_columns;
    do {
      skip_ws();
      row_columns.push_back(column());
      rows.push_back(parse_row());
      skip_ws();
    } while (accept(','));
    skip_ws();
    expect('}');
    skip_ws();
    if (!at_end()) fail_syntax("unexpected trailing text");

    const auto ncols = rows.front().size();
    ComplexMatrix m(rows.size(), ncols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != ncols) {
        throw RaggedRows("row " + std::to_string(i + 1) + " has " +
                             std::to_string(rows[i].size()) + " entries, expected " +
                             std::to_string(ncols),
                         line_, row_columns[i]);
      }
      for (std::size_t j = 0; j < ncols; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  Complex parse_entry_only() {
    const auto z = parse_entry();
    skip_ws();
    if (!at_end()) fail_syntax("unexpected trailing text");
    return z;
  }

private:
  std::vector<Complex> parse_row() {
    expect('{');
    std::vector<Complex> row;
    do {
      row.push_back(parse_entry());
      skip_ws();
    } while (accept(','));
    expect('}');
    return row;
  }

  // entry := [sign] term [sign term-ending-in-I]
  Complex parse_entry() {
    skip_ws();
    const double s1 = parse_sign();
    const auto first = parse_term();
    if (first.imaginary) {
      check_entry_end();
      return {0.0, s1 * first.value};
    }
    skip_ws();
    if (peek() == '+' || peek() == '-') {
      const std::size_t sign_col = column();
      const double s2 = parse_sign();
      const auto second = parse_term();
      if (!second.imaginary) {
        throw SyntaxError("imaginary part must end in 'I'", line_, sign_col);
      }
      check_entry_end();
      return {s1 * first.value, s2 * second.value};
    }
    check_entry_end();
    return {s1 * first.value, 0.0};
  }

  struct Term {
    double value = 1.0;
    bool imaginary = false;
  };

  // term := number ['*'] ['I'] | 'I'
  Term parse_term() {
    skip_ws();
    Term t;
    const char c = peek();
    if (c == 'i') throw LowercaseImaginaryUnit(line_, column());
    if (c == 'I') {
      advance();
      t.imaginary = true;
      return t;
    }
    if (!(is_digit(c) || c == '.')) fail_syntax("expected a number");
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    const auto res = std::from_chars(begin, end, t.value, std::chars_format::general);
    if (res.ec != std::errc() || !std::isfinite(t.value)) fail_syntax("malformed number");
    pos_ += static_cast<std::size_t>(res.ptr - begin);
    skip_ws();
    if (peek() == '*') {
      advance();
      skip_ws();
      if (peek() == 'i') throw LowercaseImaginaryUnit(line_, column());
      if (peek() != 'I') fail_syntax("expected 'I' after '*'");
    }
    if (peek() == 'i') throw LowercaseImaginaryUnit(line_, column());
    if (peek() == 'I') {
      advance();
      t.imaginary = true;
    }
    return t;
  }

  double parse_sign() {
    skip_ws();
    if (accept('-')) return -1.0;
    accept('+');
    return 1.0;
  }

  // After the imaginary unit only a separator may follow.
  void check_entry_end() {
    skip_ws();
    const char c = peek();
    if (c == ',' || c == '}' || at_end()) return;
    if (c == 'i') throw LowercaseImaginaryUnit(line_, column());
    if (c == 'I' || is_digit(c) || c == '.' || c == '+' || c == '-') {
      throw MisplacedImaginaryUnit(line_, column());
    }
    fail_syntax(std::string("unexpected character '") + c + "'");
  }

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  void advance() { ++pos_; }
  std::size_t column() const { return pos_ + 1; }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) {
      fail_syntax(at_end() ? std::string("expected '") + c + "' before end of line"
                           : std::string("expected '") + c + "'");
    }
  }
  [[noreturn]] void fail_syntax(const std::string& what) const {
    throw SyntaxError(what, line_, column());
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool is_blank(std::string_view s) { return trim(s).empty(); }

// Text after the first '=' on a "label = value" line, or nullopt.
inline std::optional<std::string_view> value_after_equals(std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) return std::nullopt;
  return trim(line.substr(eq + 1));
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline ComplexMatrix parse_matrix_literal(std::string_view text, std::size_t line = 1) {
  return detail::LiteralScanner(text, line).parse_matrix();
}

inline Complex parse_complex_literal(std::string_view text, std::size_t line = 1) {
  return detail::LiteralScanner(text, line).parse_entry_only();
}

// ---------------------------------------------------------------------------
// Import file: six "label = value" header lines in the order D, N, J, K, M, C,
// then C*M matrix literals, one per line, grouped by channel.
// ---------------------------------------------------------------------------

struct ImportFile {
  std::size_t output_dim = 0;    // D
  std::size_t input_dim = 0;     // N
  std::size_t num_states = 0;    // J
  std::size_t num_outcomes = 0;  // K
  std::size_t num_kraus = 0;     // M
  std::size_t num_channels = 0;  // C
  std::vector<std::vector<ComplexMatrix>> channels;

  friend bool operator==(const ImportFile&, const ImportFile&) = default;
};

inline ImportFile parse_import(std::string_view text) {
  static constexpr std::array<const char*, 6> kFields{"D", "N", "J", "K", "M", "C"};
  const auto lines = detail::split_lines(text);
  std::size_t li = 0;
  auto next_nonblank = [&]() -> std::optional<std::size_t> {
    while (li < lines.size() && detail::is_blank(lines[li])) ++li;
    if (li >= lines.size()) return std::nullopt;
    return li++;
  };

  std::array<std::size_t, 6> header{};
  for (std::size_t f = 0; f < kFields.size(); ++f) {
    const auto idx = next_nonblank();
    if (!idx) throw HeaderMissing(kFields[f], lines.size() + 1);
    const auto value = detail::value_after_equals(lines[*idx]);
    if (!value) throw HeaderMissing(kFields[f], *idx + 1);
    const auto n = detail::parse_number<long long>(*value);
    if (!n || *n < 1) {
      throw SyntaxError(std::string("header field ") + kFields[f] +
                            " must be a positive integer",
                        *idx + 1, lines[*idx].find('=') + 2);
    }
    header[f] = static_cast<std::size_t>(*n);
  }

  ImportFile out;
  out.output_dim = header[0];
  out.input_dim = header[1];
  out.num_states = header[2];
  out.num_outcomes = header[3];
  out.num_kraus = header[4];
  out.num_channels = header[5];

  std::vector<std::size_t> matrix_lines;
  for (std::size_t i = li; i < lines.size(); ++i) {
    if (!detail::is_blank(lines[i])) matrix_lines.push_back(i);
  }
  const std::size_t expected = out.num_kraus * out.num_channels;
  if (matrix_lines.size() != expected) {
    throw WrongMatrixCount(expected, matrix_lines.size(),
                           matrix_lines.empty() ? lines.size() : matrix_lines.back() + 1);
  }

  out.channels.resize(out.num_channels);
  for (std::size_t idx = 0; idx < matrix_lines.size(); ++idx) {
    const auto line_no = matrix_lines[idx] + 1;
    auto m = parse_matrix_literal(lines[matrix_lines[idx]], line_no);
    if (m.rows() != out.output_dim || m.cols() != out.input_dim) {
      throw MatrixShapeError("Kraus operator is " + m.shape_string() + ", expected " +
                                 std::to_string(out.output_dim) + "x" +
                                 std::to_string(out.input_dim),
                             line_no, 1);
    }
    out.channels[idx / out.num_kraus].push_back(std::move(m));
  }
  return out;
}

inline std::string serialize_import(const ImportFile& f) {
  std::string out;
  out += "D = " + std::to_string(f.output_dim) + "\n";
  out += "N = " + std::to_string(f.input_dim) + "\n";
  out += "J = " + std::to_string(f.num_states) + "\n";
  out += "K = " + std::to_string(f.num_outcomes) + "\n";
  out += "M = " + std::to_string(f.num_kraus) + "\n";
  out += "C = " + std::to_string(f.num_channels) + "\n";
  for (const auto& ch : f.channels) {
    for (const auto& k : ch) out += format_matrix_literal(k) + "\n";
  }
  return out;
}

// One matrix literal per non-blank line (fixed-ensemble files).
inline std::vector<ComplexMatrix> parse_matrix_list(std::string_view text) {
  std::vector<ComplexMatrix> out;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!detail::is_blank(lines[i])) out.push_back(parse_matrix_literal(lines[i], i + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output file
// ---------------------------------------------------------------------------

inline constexpr int kTraceDecimals = 10;

struct TraceLine {
  int index = 0;
  double mutual_information = 0.0;
};

struct OutputFile {
  std::size_t num_states = 0;    // J
  std::size_t num_outcomes = 0;  // K
  std::size_t input_dim = 0;     // N
  std::size_t num_kraus = 0;     // M
  std::size_t num_channels = 0;  // C
  std::size_t output_dim = 0;    // D
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::vector<TraceLine> trace;
  std::vector<ComplexMatrix> kraus_ops;
  std::vector<ComplexMatrix> initial_states;
  std::vector<ComplexMatrix> final_states;
  std::vector<ComplexMatrix> optimal_povm;
  std::vector<ComplexMatrix> reduced_povm;
};

inline constexpr std::array<const char*, 5> kOutputBlockTitles{
    "Kraus operators:", "Initial statistical operators:", "Optimized statistical operators:",
    "Optimal POVM:", "Reduced POVM:"};

inline std::string serialize_output(const RunReport& report, std::size_t num_channels = 1) {
  const auto& ops = report.kraus_ops;
  std::string out;
  out += "J = " + std::to_string(report.config.num_states) + "\n";
  out += "K = " + std::to_string(report.config.num_outcomes) + "\n";
  out += "N = " + std::to_string(ops.front().cols()) + "\n";
  out += "M = " + std::to_string(ops.size()) + "\n";
  out += "C = " + std::to_string(num_channels) + "\n";
  out += "D = " + std::to_string(ops.front().rows()) + "\n";
  out += "tolerance = " + format_double(report.config.tolerance) + "\n";
  out += "seed = " + std::to_string(report.config.seed) + "\n";
  out += "\n";
  for (const auto& rec : report.trace) {
    out += "AI[" + std::to_string(rec.index) + "] = " +
           format_fixed(rec.mutual_information, kTraceDecimals) + "\n";
  }

  auto block = [&out](const char* title, const std::vector<ComplexMatrix>& mats) {
    out += "\n";
    out += title;
    out += "\n";
    for (const auto& m : mats) out += format_matrix_literal(m) + "\n";
  };
  block(kOutputBlockTitles[0], ops);
  block(kOutputBlockTitles[1], report.initial_ensemble.states());
  block(kOutputBlockTitles[2], report.final_ensemble.states());
  block(kOutputBlockTitles[3], report.final_povm.outcomes());
  block(kOutputBlockTitles[4], report.reduced_povm.outcomes());
  return out;
}

inline OutputFile parse_output(std::string_view text) {
  static constexpr std::array<const char*, 8> kHeader{"J", "K", "N", "M", "C", "D", "tolerance",
                                                      "seed"};
  const auto lines = detail::split_lines(text);
  OutputFile out;
  std::size_t li = 0;

  for (std::size_t f = 0; f < kHeader.size(); ++f, ++li) {
    if (li >= lines.size()) throw HeaderMissing(kHeader[f], li + 1);
    const auto value = detail::value_after_equals(lines[li]);
    if (!value) throw HeaderMissing(kHeader[f], li + 1);
    bool ok = true;
    if (f == 6) {
      const auto v = detail::parse_number<double>(*value);
      ok = v.has_value();
      if (ok) out.tolerance = *v;
    } else if (f == 7) {
      const auto v = detail::parse_number<std::uint64_t>(*value);
      ok = v.has_value();
      if (ok) out.seed = *v;
    } else {
      const auto v = detail::parse_number<std::size_t>(*value);
      ok = v.has_value();
      if (ok) {
        const std::array<std::size_t*, 6> dst{&out.num_states, &out.num_outcomes,
                                              &out.input_dim,  &out.num_kraus,
                                              &out.num_channels, &out.output_dim};
        *dst[f] = *v;
      }
    }
    if (!ok) throw SyntaxError(std::string("malformed value for ") + kHeader[f], li + 1, 1);
  }

  while (li < lines.size() && detail::is_blank(lines[li])) ++li;
  while (li < lines.size() && lines[li].starts_with("AI[")) {
    const auto close = lines[li].find(']');
    const auto value = detail::value_after_equals(lines[li]);
    if (close == std::string_view::npos || !value) {
      throw SyntaxError("malformed AI line", li + 1, 1);
    }
    const auto idx = detail::parse_number<int>(lines[li].substr(3, close - 3));
    const auto ai = detail::parse_number<double>(*value);
    if (!idx || !ai) throw SyntaxError("malformed AI line", li + 1, 1);
    out.trace.push_back({*idx, *ai});
    ++li;
  }

  std::array<std::vector<ComplexMatrix>*, 5> blocks{&out.kraus_ops, &out.initial_states,
                                                    &out.final_states, &out.optimal_povm,
                                                    &out.reduced_povm};
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    while (li < lines.size() && detail::is_blank(lines[li])) ++li;
    if (li >= lines.size() || detail::trim(lines[li]) != kOutputBlockTitles[b]) {
      throw SyntaxError(std::string("expected block '") + kOutputBlockTitles[b] + "'", li + 1, 1);
    }
    ++li;
    while (li < lines.size() && !detail::is_blank(lines[li])) {
      blocks[b]->push_back(parse_matrix_literal(lines[li], li + 1));
      ++li;
    }
  }
  return out;
}

}  // namespace qcap
