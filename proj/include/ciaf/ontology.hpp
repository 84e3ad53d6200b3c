#pragma once

#include "ciaf/preprocess.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ciaf {

enum class Comparator { AtLeast, AtMost };

struct RuleAtom {
    std::string feature;
    Comparator cmp = Comparator::AtLeast;
    LikertLevel level{Scale::Seven, Level::Normal};
};

/// Conjunction: the positive label fires iff every atom holds.
struct DecisionRule {
    std::vector<RuleAtom> atoms;
};

/// Throws MissingFeature when the row lacks a rule feature.
bool evaluate_rule(const DecisionRule& rule, const LikertRow& row);

struct LabelPair {
    std::string negative;
    std::string positive;
};

inline constexpr std::string_view kDataPlaceholder = "{data}";

struct AttackProfile {
    std::string canonical_name;
    std::vector<std::string> aliases;
    std::string description;
    SelectionPolicy feature_policy;
    Scale scale = Scale::Seven;
    std::string system_prompt;
    std::string user_prompt_template;
    LabelPair labels;
    DecisionRule rule;
    std::string preprocessing_notes;
    /// Optional feature id -> name used when rendering rows into prompts.
    std::map<std::string, std::string> display_names;
};

struct Ontology {
    std::string version;
    std::vector<AttackProfile> profiles;
};

enum class DocumentFormat { Json, Yaml };

/// Parses and validates. Type/shape problems raise SchemaError with a path
/// such as "profiles[0].rule.all[2].cmp"; broken invariants raise
/// ValidationError naming the profile.
Ontology load_ontology(std::istream& in, DocumentFormat format = DocumentFormat::Json);
Ontology load_ontology(std::string_view text, DocumentFormat format = DocumentFormat::Json);
/// Format chosen by extension (.yaml/.yml vs anything else); I/O failure
/// raises Io.
Ontology load_ontology_file(const std::filesystem::path& path);

/// Lower-case, with whitespace and punctuation removed.
std::string normalize_query(std::string_view text);

/// Levenshtein distance divided by the longer length; 0 for two empty strings.
double normalized_edit_distance(std::string_view a, std::string_view b);

inline constexpr double kSuggestionDistance = 0.25;

/// Exact match on normalized canonical names and aliases. Otherwise throws
/// UnknownAttackError carrying canonical names within kSuggestionDistance;
/// a fuzzy match is never selected.
const AttackProfile& resolve_attack(const Ontology& ontology, std::string_view query);

/// Features the rule refers to, in atom order, without duplicates.
std::vector<std::string> rule_features(const DecisionRule& rule);

} // namespace ciaf
