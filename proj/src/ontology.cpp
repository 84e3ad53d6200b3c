#include "ciaf/ontology.hpp"

#include "ciaf/error.hpp"
#include "ciaf/text.hpp"

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace ciaf {

using nlohmann::json;

bool evaluate_rule(const DecisionRule& rule, const LikertRow& row) {
    bool all = true;
    for (const auto& atom : rule.atoms) {
        auto it = row.find(atom.feature);
        if (it == row.end())
            throw Error(ErrorKind::MissingFeature,
                        "row has no value for rule feature '" + atom.feature + "'");
        bool holds = atom.cmp == Comparator::AtLeast ? it->second >= atom.level
                                                     : it->second <= atom.level;
        all = all && holds;
    }
    return all;
}

std::vector<std::string> rule_features(const DecisionRule& rule) {
    std::vector<std::string> out;
    for (const auto& atom : rule.atoms)
        if (std::find(out.begin(), out.end(), atom.feature) == out.end())
            out.push_back(atom.feature);
    return out;
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::SchemaError, "ontology schema: " + path + ": " + what);
}

[[noreturn]] void validation_error(const std::string& profile, const std::string& what) {
    throw Error(ErrorKind::ValidationError, "ontology profile '" + profile + "': " + what);
}

const json& field(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end())
        schema_error(path + "." + key, "missing");
    return *it;
}

std::string string_field(const json& obj, const std::string& path, const char* key) {
    const json& v = field(obj, path, key);
    if (!v.is_string())
        schema_error(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> string_list(const json& v, const std::string& path) {
    if (!v.is_array())
        schema_error(path, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string())
            schema_error(path + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

SelectionPolicy parse_policy(const json& v, const std::string& path) {
    if (!v.is_object())
        schema_error(path, "expected an object");
    std::string kind = string_field(v, path, "kind");
    if (kind == "explicit")
        return SelectionPolicy::explicit_list(string_list(field(v, path, "features"),
                                                          path + ".features"));
    if (kind == "top_k" || kind == "top_k_cv") {
        const json& k = field(v, path, "k");
        if (!k.is_number_integer() || k.get<long long>() < 1)
            schema_error(path + ".k", "expected an integer >= 1");
        auto n = static_cast<std::size_t>(k.get<long long>());
        return kind == "top_k" ? SelectionPolicy::top_k(n) : SelectionPolicy::top_k_cv(n);
    }
    if (kind == "threshold") {
        const json& t = field(v, path, "threshold");
        if (!t.is_number())
            schema_error(path + ".threshold", "expected a number");
        return SelectionPolicy::min_stddev(t.get<double>());
    }
    schema_error(path + ".kind", "expected one of explicit, top_k, top_k_cv, threshold");
}

struct RawAtom {
    std::string feature;
    Comparator cmp;
    Level level;
};

std::vector<RawAtom> parse_rule(const json& v, const std::string& path) {
    if (!v.is_object())
        schema_error(path, "expected an object");
    const json& all = field(v, path, "all");
    if (!all.is_array())
        schema_error(path + ".all", "expected an array");
    std::vector<RawAtom> atoms;
    for (std::size_t i = 0; i < all.size(); ++i) {
        std::string p = path + ".all[" + std::to_string(i) + "]";
        if (!all[i].is_object())
            schema_error(p, "expected an object");
        RawAtom atom;
        atom.feature = string_field(all[i], p, "feature");
        std::string cmp = string_field(all[i], p, "cmp");
        if (cmp == "ge")
            atom.cmp = Comparator::AtLeast;
        else if (cmp == "le")
            atom.cmp = Comparator::AtMost;
        else
            schema_error(p + ".cmp", "expected \"ge\" or \"le\", got \"" + cmp + "\"");
        std::string level = string_field(all[i], p, "level");
        auto parsed = parse_level(level);
        if (!parsed)
            schema_error(p + ".level", "unknown Likert level \"" + level + "\"");
        atom.level = *parsed;
        atoms.push_back(std::move(atom));
    }
    return atoms;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size()))
        ++n;
    return n;
}

AttackProfile parse_profile(const json& v, const std::string& path) {
    if (!v.is_object())
        schema_error(path, "expected an object");
    AttackProfile p;
    p.canonical_name = string_field(v, path, "canonical_name");
    p.aliases = string_list(field(v, path, "aliases"), path + ".aliases");
    p.description = string_field(v, path, "description");
    p.feature_policy = parse_policy(field(v, path, "feature_policy"), path + ".feature_policy");

    std::string scale = string_field(v, path, "scale");
    auto parsed_scale = parse_scale(scale);
    if (!parsed_scale)
        schema_error(path + ".scale", "expected \"five\" or \"seven\", got \"" + scale + "\"");
    p.scale = *parsed_scale;

    p.system_prompt = string_field(v, path, "system_prompt");
    p.user_prompt_template = string_field(v, path, "user_prompt_template");

    auto labels = string_list(field(v, path, "labels"), path + ".labels");
    if (labels.size() != 2)
        validation_error(p.canonical_name, "labels must be exactly [negative, positive]");
    p.labels = {labels[0], labels[1]};

    auto raw_atoms = parse_rule(field(v, path, "rule"), path + ".rule");

    if (auto it = v.find("preprocessing_notes"); it != v.end()) {
        if (!it->is_string())
            schema_error(path + ".preprocessing_notes", "expected a string");
        p.preprocessing_notes = it->get<std::string>();
    }
    if (auto it = v.find("display_names"); it != v.end()) {
        if (!it->is_object())
            schema_error(path + ".display_names", "expected an object");
        for (const auto& [k, name] : it->items()) {
            if (!name.is_string())
                schema_error(path + ".display_names." + k, "expected a string");
            p.display_names[k] = name.get<std::string>();
        }
    }

    // Invariants.
    const std::string& who = p.canonical_name;
    if (trim(p.canonical_name).empty())
        validation_error(path, "canonical_name is empty");
    if (count_occurrences(p.user_prompt_template, kDataPlaceholder) != 1)
        validation_error(who, "user_prompt_template must contain {data} exactly once");
    if (trim(p.labels.negative).empty() || trim(p.labels.positive).empty())
        validation_error(who, "labels must be nonempty");
    if (to_lower(trim(p.labels.negative)) == to_lower(trim(p.labels.positive)))
        validation_error(who, "labels must be distinct");
    if (raw_atoms.empty())
        validation_error(who, "rule needs at least one atom");
    for (const auto& a : raw_atoms) {
        if (!scale_contains(p.scale, a.level))
            validation_error(who, "rule level '" + std::string(level_name(a.level)) +
                                      "' is not on the " + to_string(p.scale) + "-level scale");
        p.rule.atoms.push_back({a.feature, a.cmp, LikertLevel(p.scale, a.level)});
    }
    if (p.feature_policy.kind == SelectionPolicy::Kind::Explicit) {
        const auto& listed = p.feature_policy.features;
        for (const auto& f : rule_features(p.rule))
            if (std::find(listed.begin(), listed.end(), f) == listed.end())
                validation_error(who, "rule feature '" + f +
                                          "' is not reachable under the explicit feature list");
        std::set<std::string> seen;
        for (const auto& f : listed)
            if (!seen.insert(f).second)
                validation_error(who, "feature '" + f + "' listed twice");
    }
    return p;
}

Ontology parse_document(const json& doc) {
    if (!doc.is_object())
        schema_error("$", "expected an object");
    Ontology o;
    o.version = string_field(doc, "$", "version");
    const json& profiles = field(doc, "$", "profiles");
    if (!profiles.is_array())
        schema_error("$.profiles", "expected an array");
    for (std::size_t i = 0; i < profiles.size(); ++i)
        o.profiles.push_back(parse_profile(profiles[i], "$.profiles[" + std::to_string(i) + "]"));

    // Names must stay unambiguous after query normalization.
    std::map<std::string, std::string> canonical;
    for (const auto& p : o.profiles) {
        auto key = normalize_query(p.canonical_name);
        if (!canonical.emplace(key, p.canonical_name).second)
            validation_error(p.canonical_name, "duplicate canonical_name");
    }
    std::map<std::string, std::string> alias_owner;
    for (const auto& p : o.profiles) {
        for (const auto& alias : p.aliases) {
            auto key = normalize_query(alias);
            if (key.empty())
                validation_error(p.canonical_name, "alias '" + alias + "' is empty");
            if (canonical.count(key))
                validation_error(p.canonical_name, "alias '" + alias +
                                                       "' collides with canonical name '" +
                                                       canonical[key] + "'");
            auto [it, inserted] = alias_owner.emplace(key, p.canonical_name);
            if (!inserted)
                validation_error(p.canonical_name, "alias '" + alias +
                                                       "' already used by profile '" +
                                                       it->second + "'");
        }
    }
    return o;
}

json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
        return nullptr;
    case YAML::NodeType::Sequence: {
        json arr = json::array();
        for (const auto& item : node)
            arr.push_back(yaml_to_json(item));
        return arr;
    }
    case YAML::NodeType::Map: {
        json obj = json::object();
        for (const auto& kv : node)
            obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
        return obj;
    }
    case YAML::NodeType::Scalar:
        break;
    }
    const std::string& s = node.Scalar();
    // Quoted scalars carry the "!" tag and always stay strings.
    if (node.Tag() != "!") {
        if (auto i = parse_integer(s); i && trim(s) == s)
            return *i;
        if (auto d = parse_real(s); d && trim(s) == s)
            return *d;
        if (s == "true" || s == "false")
            return s == "true";
        if (s == "null" || s == "~")
            return nullptr;
    }
    return s;
}

} // namespace

Ontology load_ontology(std::string_view text, DocumentFormat format) {
    json doc;
    if (format == DocumentFormat::Yaml) {
        try {
            doc = yaml_to_json(YAML::Load(std::string(text)));
        } catch (const YAML::Exception& e) {
            throw Error(ErrorKind::SchemaError, std::string("ontology YAML: ") + e.what());
        }
    } else {
        doc = json::parse(text, nullptr, false);
        if (doc.is_discarded())
            throw Error(ErrorKind::SchemaError, "ontology JSON: document is not valid JSON");
    }
    return parse_document(doc);
}

Ontology load_ontology(std::istream& in, DocumentFormat format) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_ontology(ss.str(), format);
}

Ontology load_ontology_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot read ontology " + path.string());
    auto ext = to_lower(path.extension().string());
    return load_ontology(in, ext == ".yaml" || ext == ".yml" ? DocumentFormat::Yaml
                                                             : DocumentFormat::Json);
}

std::string normalize_query(std::string_view text) {
    std::string out;
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (std::isspace(u) || std::ispunct(u))
            continue;
        out += static_cast<char>(std::tolower(u));
    }
    return out;
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty())
        return 0.0;
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[b.size()]) / static_cast<double>(std::max(a.size(), b.size()));
}

const AttackProfile& resolve_attack(const Ontology& ontology, std::string_view query) {
    const std::string key = normalize_query(query);
    for (const auto& p : ontology.profiles) {
        if (normalize_query(p.canonical_name) == key)
            return p;
        for (const auto& alias : p.aliases)
            if (normalize_query(alias) == key)
                return p;
    }

    std::vector<std::pair<double, std::string>> candidates;
    if (!key.empty()) {
        for (const auto& p : ontology.profiles) {
            double best = normalized_edit_distance(key, normalize_query(p.canonical_name));
            for (const auto& alias : p.aliases)
                best = std::min(best, normalized_edit_distance(key, normalize_query(alias)));
            if (best <= kSuggestionDistance)
                candidates.emplace_back(best, p.canonical_name);
        }
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::string> suggestions;
    for (auto& c : candidates)
        suggestions.push_back(std::move(c.second));
    throw UnknownAttackError(std::string(query), std::move(suggestions));
}

} // namespace ciaf
