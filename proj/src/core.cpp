#include "smjp/core.hpp"

namespace smjp {

Alphabet::Alphabet(AlphabetKind kind, std::vector<std::string> labels)
    : kind_(kind), labels_(std::move(labels)) {
  if (labels_.empty()) throw Error(ErrorCode::InvalidAlphabet, "alphabet must not be empty");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const std::string& label = labels_[i];
    if (label.empty()) throw Error(ErrorCode::InvalidAlphabet, "empty symbol label");
    if (label.find_first_of(",# \t\r\n") != std::string::npos)
      throw Error(ErrorCode::InvalidAlphabet, "symbol '" + label + "' contains a reserved character");
    if (!lookup_.emplace(label, static_cast<int>(i)).second)
      throw Error(ErrorCode::InvalidAlphabet, "duplicate symbol '" + label + "'");
  }
}

Alphabet Alphabet::numbered(AlphabetKind kind, std::size_t n, const std::string& prefix) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(prefix + std::to_string(i));
  return Alphabet(kind, std::move(labels));
}

int Alphabet::index_of(const std::string& label) const {
  auto it = lookup_.find(label);
  if (it == lookup_.end()) throw Error(ErrorCode::UnknownSymbol, "unknown symbol '" + label + "'");
  return it->second;
}

}  // namespace smjp
