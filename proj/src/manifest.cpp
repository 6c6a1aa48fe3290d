#include "mospred/manifest.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "mospred/error.hpp"

namespace fs = std::filesystem;

namespace mospred {

namespace {

constexpr std::string_view kHeader = "utterance_id,feature_path,system_id,judge_id,score";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_score(std::string_view field, std::uint64_t offset) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw FormatError("manifest: cannot parse score '" + std::string(field) + "'", offset);
  }
  if (value < 1.0 || value > 5.0) {
    throw FormatError("manifest: score " + std::string(field) + " outside [1, 5]", offset);
  }
  return value;
}

void check_field(std::string_view value, std::string_view what) {
  if (value.find_first_of(",\n\r\"") != std::string_view::npos) {
    throw ArgumentError("manifest " + std::string(what) + " '" + std::string(value) +
                        "' contains a reserved character");
  }
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  throw ArgumentError("unknown split '" + std::string(name) + "'");
}

std::vector<std::string> DatasetManifest::system_ids() const {
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e.system_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> DatasetManifest::judge_ids() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    for (const auto& j : e.judge_scores) ids.insert(j.judge_id);
  }
  return {ids.begin(), ids.end()};
}

DatasetManifest parse_manifest_csv(std::string_view text, const std::string& base_dir, Split split) {
  DatasetManifest manifest;
  manifest.split = split;

  std::unordered_map<std::string, std::size_t> index;
  std::vector<bool> mean_only;
  std::uint64_t offset = 0;
  bool header_seen = false;

  while (offset < text.size()) {
    auto eol = text.find('\n', offset);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line_offset = offset;
    const auto line = trim(text.substr(offset, eol - offset));
    offset = eol + 1;
    if (line.empty()) continue;

    if (!header_seen) {
      if (line != kHeader) {
        throw FormatError("manifest: header must be '" + std::string(kHeader) + "'", line_offset);
      }
      header_seen = true;
      continue;
    }

    const auto fields = split_fields(line);
    if (fields.size() != 5) {
      throw FormatError("manifest: expected 5 fields, found " + std::to_string(fields.size()),
                        line_offset);
    }
    const std::string utt(trim(fields[0]));
    const std::string path(trim(fields[1]));
    const std::string system(trim(fields[2]));
    const std::string judge(trim(fields[3]));
    if (utt.empty() || path.empty() || system.empty()) {
      throw FormatError("manifest: utterance_id, feature_path and system_id must be non-empty",
                        line_offset);
    }
    const double score = parse_score(trim(fields[4]), line_offset);

    auto it = index.find(utt);
    if (it == index.end()) {
      UtteranceRecord rec;
      rec.utterance_id = utt;
      const fs::path p(path);
      rec.feature_path = p.is_absolute() || base_dir.empty() ? p.string() : (fs::path(base_dir) / p).string();
      rec.system_id = system;
      it = index.emplace(utt, manifest.entries.size()).first;
      manifest.entries.push_back(std::move(rec));
      mean_only.push_back(judge.empty());
    }
    auto& rec = manifest.entries[it->second];
    if (rec.system_id != system) {
      throw FormatError("manifest: utterance '" + utt + "' listed under two systems", line_offset);
    }
    if (mean_only[it->second] != judge.empty() ||
        (judge.empty() && !rec.judge_scores.empty())) {
      throw FormatError("manifest: utterance '" + utt + "' mixes mean-only and judge rows",
                        line_offset);
    }
    if (judge.empty()) {
      if (rec.mean_score != 0.0) {
        throw FormatError("manifest: duplicate mean-only row for '" + utt + "'", line_offset);
      }
      rec.mean_score = score;
    } else {
      for (const auto& j : rec.judge_scores) {
        if (j.judge_id == judge) {
          throw FormatError("manifest: judge '" + judge + "' scores '" + utt + "' twice", line_offset);
        }
      }
      rec.judge_scores.push_back({judge, score});
    }
  }
  if (!header_seen) {
    throw FormatError("manifest: missing header", 0);
  }

  for (auto& rec : manifest.entries) {
    if (rec.judge_scores.empty()) continue;
    double sum = 0.0;
    for (const auto& j : rec.judge_scores) sum += j.score;
    rec.mean_score = sum / static_cast<double>(rec.judge_scores.size());
  }
  return manifest;
}

DatasetManifest load_manifest(const std::string& path, Split split, bool check_features) {
  const auto text = detail::read_whole_file(path);
  auto manifest = parse_manifest_csv(text, fs::path(path).parent_path().string(), split);
  if (manifest.entries.empty()) {
    throw ArgumentError("manifest '" + path + "' has no entries");
  }
  if (check_features) {
    for (const auto& rec : manifest.entries) {
      if (!fs::exists(rec.feature_path)) {
        throw IoError("manifest '" + path + "': feature file '" + rec.feature_path + "' does not exist");
      }
      const auto header = read_feature_header(rec.feature_path);
      if (manifest.feature_dim == 0) {
        manifest.feature_dim = static_cast<int>(header.dim);
      } else if (static_cast<int>(header.dim) != manifest.feature_dim) {
        throw ShapeError("manifest '" + path + "': '" + rec.feature_path + "' has dimension " +
                         std::to_string(header.dim) + ", expected " +
                         std::to_string(manifest.feature_dim));
      }
    }
  }
  return manifest;
}

std::string format_manifest_csv(const DatasetManifest& manifest, const std::string& base_dir) {
  std::ostringstream out;
  out.precision(17);
  out << kHeader << '\n';
  for (const auto& rec : manifest.entries) {
    check_field(rec.utterance_id, "utterance_id");
    check_field(rec.system_id, "system_id");
    fs::path p(rec.feature_path);
    if (!base_dir.empty()) {
      const auto rel = p.lexically_relative(base_dir);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    const auto path = p.generic_string();
    check_field(path, "feature_path");
    if (rec.judge_scores.empty()) {
      out << rec.utterance_id << ',' << path << ',' << rec.system_id << ",," << rec.mean_score << '\n';
    }
    for (const auto& j : rec.judge_scores) {
      check_field(j.judge_id, "judge_id");
      out << rec.utterance_id << ',' << path << ',' << rec.system_id << ',' << j.judge_id << ','
          << j.score << '\n';
    }
  }
  return std::move(out).str();
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  detail::write_whole_file(path, format_manifest_csv(manifest, fs::path(path).parent_path().string()));
}

LoadedSplit load_split(const DatasetManifest& manifest) {
  LoadedSplit split;
  split.manifest = manifest;
  split.features.reserve(manifest.entries.size());
  for (const auto& rec : manifest.entries) {
    auto t = read_feature_file(rec.feature_path);
    t.utterance_id = rec.utterance_id;
    if (split.manifest.feature_dim == 0) {
      split.manifest.feature_dim = static_cast<int>(t.dim());
    } else if (t.dim() != split.manifest.feature_dim) {
      throw ShapeError("utterance '" + rec.utterance_id + "' has dimension " + std::to_string(t.dim()) +
                       ", expected " + std::to_string(split.manifest.feature_dim));
    }
    split.features.push_back(std::move(t));
  }
  return split;
}

LoadedSplit load_split(const std::string& manifest_path, Split split) {
  return load_split(load_manifest(manifest_path, split));
}

}  // namespace mospred
