#pragma once

// On-disk preference datasets: layouts/*.json, pairs.jsonl (layouts by
// reference), annotations.jsonl and manifest.json. Also splits and the
// dataset statistics report.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "designsense/json_io.hpp"
#include "designsense/metrics.hpp"
#include "designsense/preference.hpp"

namespace dsense {

enum class Split { train, val, test };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct AnnotationRecord {
    std::string pair_id;
    std::string annotator_id;
    PreferenceLabel label = PreferenceLabel::both_bad;
    std::int64_t timestamp_ms = 0;
    std::optional<std::int64_t> duration_ms;
    Json extra = Json::object();

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

Json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const Json& j, const std::string& path = "annotation");

struct Dataset {
    std::map<std::string, Layout> layouts;  // by layout_id
    std::vector<PreferencePair> pairs;      // layouts resolved
    std::vector<AnnotationRecord> annotations;
    std::map<std::string, Split> split_assignment;
    Json manifest_extra = Json::object();

    // Adds a pair and both of its layouts; throws IntegrityError when a layout
    // id is already bound to different content.
    void add_pair(const PreferencePair& p);
};

// Writes all four files atomically (per file). Provenance counts in the
// manifest are recomputed from the pairs.
void save_dataset(const Dataset& d, const std::string& dir);

// ParseError names the file, line and field; IntegrityError names an absent id.
Dataset load_dataset(const std::string& dir);

// Largest-remainder apportionment of n over positive ratios; ties go to the
// earlier entry.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& ratios);

inline const std::vector<double> kDefaultSplitRatio{8735.0, 500.0, 1000.0};

struct SplitOptions {
    std::vector<double> ratios = kDefaultSplitRatio;  // train : val : test
    std::uint64_t seed = 0;
    bool stratified = false;  // keep gold-label proportions within each split
};

// Seeded shuffle then contiguous cut (or a stratified interleave). Throws
// DomainError on bad ratios or fewer pairs than splits.
std::map<std::string, Split> split_pairs(const std::vector<PreferencePair>& pairs, const SplitOptions& opt = {});

std::map<Split, std::size_t> split_sizes(const std::map<std::string, Split>& assignment);

struct StatsReport {
    Json json;
    std::string csv;  // section,key,count,proportion
};

// Histogram bin width for log2(width / height); bins are centred on multiples.
inline constexpr double kAspectBinWidth = 0.25;

StatsReport stats_report(const Dataset& d);

}  // namespace dsense
