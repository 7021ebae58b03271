#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "smjp/switching_hmm.hpp"

namespace smjp {

inline constexpr int kModelFormatVersion = 1;

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

/// Strict parse of a whole token; throws MalformedLine on junk.
double parse_real(std::string_view token);

/// Self-describing text document:
///
///   smjp-model 1
///   states <N> <labels...>
///   actions <K> <labels...>
///   observations <O> <labels...>
///   omega <rate>
///   initial <N values>
///   generator <k>      followed by N rows of N rates
///   mask <k>           followed by N rows of 0/1
///   emission <slot>    followed by N rows of O probabilities
///   meta <key> <value> (any number)
///   end
std::string serialize_model(const SwitchingSMJP& model);

SwitchingSMJP deserialize_model(std::string_view text);

void save_model(const std::filesystem::path& path, const SwitchingSMJP& model);
SwitchingSMJP load_model(const std::filesystem::path& path);

/// Whole-file helpers shared with the CLI.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace smjp
