#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace stancebench {

/// Three-way stance label. The enumerator order is also the tie-break
/// precedence used everywhere a residual tie must be resolved.
enum class Label { For = 0, Against = 1, NoArgument = 2 };

inline constexpr std::size_t kLabelCount = 3;
inline constexpr std::array<Label, kLabelCount> kAllLabels{Label::For, Label::Against,
                                                           Label::NoArgument};

/// A model answer that may have failed to parse. std::nullopt means Unparsed.
using Prediction = std::optional<Label>;

constexpr std::size_t index_of(Label label) { return static_cast<std::size_t>(label); }

/// Canonical serialized form: "For", "Against", "NoArgument".
std::string_view to_string(Label label);

/// "For", "Against", "NoArgument" or "Unparsed".
std::string_view to_string(const Prediction& prediction);

/// Case-insensitive; accepts "For", "Against", "NoArgument", "No argument",
/// "no_argument".
std::optional<Label> parse_label_name(std::string_view text);

/// Like parse_label_name but also maps "Unparsed" to an empty Prediction.
/// Returns false for anything else.
bool parse_prediction_name(std::string_view text, Prediction& out);

enum class DatasetKind { UKP, ArgsMe };

std::string_view to_string(DatasetKind kind);
std::optional<DatasetKind> parse_dataset_kind(std::string_view text);

}  // namespace stancebench
