#include "smjp/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace smjp {

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || token.empty())
    throw Error(ErrorCode::MalformedLine, "not a number: '" + std::string(token) + "'");
  return value;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

class ModelReader {
 public:
  explicit ModelReader(std::string_view text) {
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines_.push_back(line);
    }
  }

  bool done() const { return pos_ >= lines_.size(); }
  std::size_t line_number() const { return pos_; }

  std::vector<std::string> next_tokens() {
    while (pos_ < lines_.size()) {
      auto toks = split_ws(lines_[pos_++]);
      if (!toks.empty()) return toks;
    }
    fail("unexpected end of document");
  }

  const std::string& raw_line() const { return lines_.at(pos_ - 1); }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::MalformedModel, "line " + std::to_string(pos_) + ": " + what);
  }

  double real(const std::string& token) const {
    try {
      return parse_real(token);
    } catch (const Error&) {
      fail("bad number '" + token + "'");
    }
  }

  long integer(const std::string& token) const {
    long v = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) fail("bad integer '" + token + "'");
    return v;
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto toks = next_tokens();
      if (static_cast<Eigen::Index>(toks.size()) != cols) fail("expected " + std::to_string(cols) + " values");
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = real(toks[static_cast<std::size_t>(j)]);
    }
    return m;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

void write_alphabet(std::ostream& out, const char* tag, const Alphabet& a) {
  out << tag << ' ' << a.size();
  for (const auto& l : a.labels()) out << ' ' << l;
  out << '\n';
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_real(m(i, j));
    out << '\n';
  }
}

}  // namespace

std::string serialize_model(const SwitchingSMJP& model) {
  std::ostringstream out;
  out << "smjp-model " << kModelFormatVersion << '\n';
  write_alphabet(out, "states", model.states());
  write_alphabet(out, "actions", model.actions());
  write_alphabet(out, "observations", model.observations());
  out << "omega " << format_real(model.omega()) << '\n';
  out << "initial";
  for (Eigen::Index i = 0; i < model.initial().size(); ++i) out << ' ' << format_real(model.initial()(i));
  out << '\n';
  for (int k = 0; k < model.n_actions(); ++k) {
    out << "generator " << k << '\n';
    write_matrix(out, model.generator(k).rates());
  }
  for (int k = 0; k < model.n_actions(); ++k) {
    out << "mask " << k << '\n';
    const Mask& m = model.mask(k);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << (m(i, j) ? 1 : 0);
      out << '\n';
    }
  }
  for (int slot = 0; slot < model.n_emission_slots(); ++slot) {
    out << "emission " << slot << '\n';
    write_matrix(out, model.emission_slot(slot).probs());
  }
  for (const auto& [key, value] : model.metadata) out << "meta " << key << ' ' << value << '\n';
  out << "end\n";
  return out.str();
}

SwitchingSMJP deserialize_model(std::string_view text) {
  ModelReader in(text);
  auto header = in.next_tokens();
  if (header.size() != 2 || header[0] != "smjp-model") in.fail("missing 'smjp-model' header");
  if (in.integer(header[1]) != kModelFormatVersion) in.fail("unsupported model version " + header[1]);

  auto read_alphabet = [&](const char* tag, AlphabetKind kind) {
    auto toks = in.next_tokens();
    if (toks.size() < 2 || toks[0] != tag) in.fail(std::string("expected '") + tag + "'");
    const long n = in.integer(toks[1]);
    if (n < 1 || static_cast<std::size_t>(n) + 2 != toks.size()) in.fail(std::string("bad ") + tag + " count");
    try {
      return Alphabet(kind, std::vector<std::string>(toks.begin() + 2, toks.end()));
    } catch (const Error& e) {
      in.fail(e.what());
    }
  };
  Alphabet states = read_alphabet("states", AlphabetKind::State);
  Alphabet actions = read_alphabet("actions", AlphabetKind::Action);
  Alphabet observations = read_alphabet("observations", AlphabetKind::Observation);
  const auto n = static_cast<Eigen::Index>(states.size());
  const auto k_count = static_cast<int>(actions.size());
  const auto o_count = static_cast<Eigen::Index>(observations.size());

  auto toks = in.next_tokens();
  if (toks.size() != 2 || toks[0] != "omega") in.fail("expected 'omega'");
  const double omega = in.real(toks[1]);

  toks = in.next_tokens();
  if (toks.empty() || toks[0] != "initial" || static_cast<Eigen::Index>(toks.size()) != n + 1)
    in.fail("expected 'initial' with one value per state");
  Vector initial(n);
  for (Eigen::Index i = 0; i < n; ++i) initial(i) = in.real(toks[static_cast<std::size_t>(i + 1)]);

  std::vector<Matrix> rates;
  std::vector<Mask> masks;
  std::vector<Matrix> emissions;
  std::map<std::string, std::string> metadata;
  for (;;) {
    toks = in.next_tokens();
    const std::string& tag = toks[0];
    if (tag == "end") break;
    if (tag == "meta") {
      if (toks.size() < 2) in.fail("meta needs a key");
      const std::string& line = in.raw_line();
      const auto key_pos = line.find(toks[1], line.find("meta") + 4);
      const auto value_pos = key_pos + toks[1].size();
      std::string value = value_pos < line.size() ? line.substr(value_pos + 1) : std::string();
      metadata[toks[1]] = value;
      continue;
    }
    if (toks.size() != 2) in.fail("expected '<section> <index>'");
    const long idx = in.integer(toks[1]);
    if (tag == "generator") {
      if (idx != static_cast<long>(rates.size()) || idx >= k_count) in.fail("generator sections out of order");
      rates.push_back(in.matrix(n, n));
    } else if (tag == "mask") {
      if (idx != static_cast<long>(masks.size()) || idx >= k_count) in.fail("mask sections out of order");
      const Matrix m = in.matrix(n, n);
      if (((m.array() != 0.0) && (m.array() != 1.0)).any()) in.fail("mask entries must be 0 or 1");
      masks.push_back(m.array() != 0.0);
    } else if (tag == "emission") {
      if (idx != static_cast<long>(emissions.size()) || idx >= k_count) in.fail("emission sections out of order");
      emissions.push_back(in.matrix(n, o_count));
    } else {
      in.fail("unknown section '" + tag + "'");
    }
  }
  if (static_cast<int>(rates.size()) != k_count) in.fail("missing generator sections");
  if (static_cast<int>(masks.size()) != k_count) in.fail("missing mask sections");
  if (emissions.size() != 1 && static_cast<int>(emissions.size()) != k_count) in.fail("wrong number of emission sections");

  try {
    std::vector<GeneratorMatrix> generators;
    for (const auto& r : rates) generators.push_back(GeneratorMatrix::validated(r));
    std::vector<StochasticMatrix> ems;
    for (const auto& e : emissions) ems.push_back(StochasticMatrix::validated(e));
    SwitchingSMJP model(std::move(states), std::move(actions), std::move(observations), std::move(generators),
                        std::move(ems), std::move(initial), omega, std::move(masks));
    model.metadata = std::move(metadata);
    return model;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedModel) throw;
    throw Error(ErrorCode::MalformedModel, std::string("invalid model contents: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

void save_model(const std::filesystem::path& path, const SwitchingSMJP& model) {
  write_file(path, serialize_model(model));
}

SwitchingSMJP load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace smjp
