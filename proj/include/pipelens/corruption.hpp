#pragma once

#include "pipelens/relation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pipelens {

enum class CorruptionKind { MissingValues, Outliers, CategorySwap };

std::string_view to_string(CorruptionKind kind);
std::optional<CorruptionKind> corruption_kind_from_string(std::string_view name);

//! Which side of the train/test split a corruption applies to.
enum class Branch { Train, Test, Both };

std::string_view to_string(Branch branch);
std::optional<Branch> branch_from_string(std::string_view name);

//! Indices of the round(fraction * n) rows a corruption with `seed` touches.
//! Rows are ranked by (hash bucket, hash, position) of row_hash(seed, row id),
//! the same hash split assignment uses, and the lowest ranks are chosen.
//! Returned indices are ascending.
std::vector<std::size_t> corruption_targets(const std::vector<RowId> &row_ids, double fraction, std::uint64_t seed);

//! Returns a copy of `relation` with the chosen rows of `column` corrupted:
//! MissingValues sets Null, Outliers multiplies by `factor` (Int cells are
//! rounded back to Int), CategorySwap replaces a Text value with a different
//! one from the column's value set. Throws UnknownColumn or TypeMismatch.
Relation corrupt(const Relation &relation, const std::string &column, CorruptionKind kind, double fraction,
                 double factor, std::uint64_t seed);

} // namespace pipelens
