/*
 * Copyright 2026 The spkg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef SPKG_DATA_HPP
#define SPKG_DATA_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "spkg/core.hpp"

namespace spkg {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// Label is -1 or +1. Unlabeled splits are stored with label +1 and a
// dataset-level flag that says the labels are implicit.
struct LabeledTriple {
  Triple triple;
  int label = 1;

  friend bool operator==(const LabeledTriple&, const LabeledTriple&) = default;
};

// A parsed line of a triple file, before names are resolved to ids. The raw
// line is kept so cleaned splits can be written back byte-identically.
struct RawTriple {
  std::string head;
  std::string relation;
  std::string tail;
  int label = 1;
  bool labeled = false;
  std::size_t line_no = 0;
  std::string raw_line;
};

// ---------------------------------------------------------------------------
// TSV parsing. One triple per line, single-TAB separated; labeled files carry
// a fourth field that is "1" or "-1".

inline RawTriple parse_triple_line(std::string_view line, std::size_t line_no) {
  RawTriple rec;
  rec.line_no = line_no;
  rec.raw_line = std::string(line);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (fields.size() != 3 && fields.size() != 4) {
    throw ParseError("line " + std::to_string(line_no) + ": expected 3 or 4 tab-separated fields, got " +
                     std::to_string(fields.size()));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (fields[i].empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty field " + std::to_string(i + 1));
    }
  }
  rec.head = std::string(fields[0]);
  rec.relation = std::string(fields[1]);
  rec.tail = std::string(fields[2]);
  if (fields.size() == 4) {
    rec.labeled = true;
    if (fields[3] == "1") {
      rec.label = 1;
    } else if (fields[3] == "-1") {
      rec.label = -1;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": label must be 1 or -1, got \"" +
                       std::string(fields[3]) + "\"");
    }
  }
  return rec;
}

// Reads a whole triple file. Requires a uniform arity: mixing labeled and
// unlabeled lines in one file is a parse error.
inline std::vector<RawTriple> read_triple_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open triple file: " + path.string());
  std::vector<RawTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse_triple_line(line, line_no));
    if (out.size() > 1 && out.back().labeled != out.front().labeled) {
      throw ParseError("line " + std::to_string(line_no) + ": mixed labeled and unlabeled records in " +
                       path.string());
    }
  }
  return out;
}

inline bool detect_labeled(std::span<const RawTriple> records) {
  return !records.empty() && records.front().labeled;
}

// ---------------------------------------------------------------------------
// Vocabulary: dense ids assigned in first-appearance order over the training
// split only, so unseen validation/test names stay detectable.

class Vocabulary {
 public:
  EntityId add_entity(const std::string& name) {
    auto [it, inserted] = entity_ids_.try_emplace(name, static_cast<EntityId>(entity_names_.size()));
    if (inserted) entity_names_.push_back(name);
    return it->second;
  }

  RelationId add_relation(const std::string& name) {
    auto [it, inserted] = relation_ids_.try_emplace(name, static_cast<RelationId>(relation_names_.size()));
    if (inserted) relation_names_.push_back(name);
    return it->second;
  }

  std::optional<EntityId> entity_id(const std::string& name) const {
    auto it = entity_ids_.find(name);
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<RelationId> relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& entity_name(EntityId id) const { return entity_names_.at(static_cast<std::size_t>(id)); }
  const std::string& relation_name(RelationId id) const {
    return relation_names_.at(static_cast<std::size_t>(id));
  }

  std::size_t n_entities() const { return entity_names_.size(); }
  std::size_t n_relations() const { return relation_names_.size(); }

  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

inline Vocabulary build_vocabulary(std::span<const RawTriple> train_records) {
  Vocabulary vocab;
  for (const RawTriple& rec : train_records) {
    vocab.add_entity(rec.head);
    vocab.add_relation(rec.relation);
    vocab.add_entity(rec.tail);
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Split loading.

enum class LoadPolicy { Strict, Skip };

struct LoadResult {
  std::vector<LabeledTriple> triples;
  std::size_t skipped = 0;
};

inline LoadResult resolve_triples(std::span<const RawTriple> records, const Vocabulary& vocab,
                                  LoadPolicy policy) {
  LoadResult result;
  result.triples.reserve(records.size());
  for (const RawTriple& rec : records) {
    auto h = vocab.entity_id(rec.head);
    auto r = vocab.relation_id(rec.relation);
    auto t = vocab.entity_id(rec.tail);
    if (!h || !r || !t) {
      if (policy == LoadPolicy::Strict) {
        const std::string& offender = !h ? rec.head : (!r ? rec.relation : rec.tail);
        throw DataError("line " + std::to_string(rec.line_no) + ": unknown " +
                        (!r && h ? "relation" : "entity") + " \"" + offender + "\"");
      }
      ++result.skipped;
      continue;
    }
    result.triples.push_back(LabeledTriple{Triple{*h, *r, *t}, rec.label});
  }
  return result;
}

inline LoadResult load_split(const std::filesystem::path& path, const Vocabulary& vocab, bool labeled,
                             LoadPolicy policy) {
  std::vector<RawTriple> records = read_triple_file(path);
  if (!records.empty() && records.front().labeled != labeled) {
    throw DataError(path.string() + ": file is " + (records.front().labeled ? "labeled" : "unlabeled") +
                    " but was loaded as " + (labeled ? "labeled" : "unlabeled"));
  }
  return resolve_triples(records, vocab, policy);
}

// ---------------------------------------------------------------------------
// Dataset.

struct Dataset {
  Vocabulary vocab;
  std::vector<Triple> train;
  std::vector<LabeledTriple> valid;
  std::vector<LabeledTriple> test;
  bool labeled_valid = false;
  bool labeled_test = false;

  std::size_t n_entities() const { return vocab.n_entities(); }
  std::size_t n_relations() const { return vocab.n_relations(); }
};

struct DatasetLoadInfo {
  std::size_t skipped_valid = 0;
  std::size_t skipped_test = 0;
};

inline Dataset make_dataset(std::span<const RawTriple> train_records,
                            std::span<const RawTriple> valid_records,
                            std::span<const RawTriple> test_records, LoadPolicy policy,
                            DatasetLoadInfo* info = nullptr) {
  if (train_records.empty()) throw DataError("training split is empty; no vocabulary can be formed");
  Dataset ds;
  ds.vocab = build_vocabulary(train_records);
  ds.train.reserve(train_records.size());
  for (const RawTriple& rec : train_records) {
    ds.train.push_back(Triple{*ds.vocab.entity_id(rec.head), *ds.vocab.relation_id(rec.relation),
                              *ds.vocab.entity_id(rec.tail)});
  }
  LoadResult v = resolve_triples(valid_records, ds.vocab, policy);
  LoadResult t = resolve_triples(test_records, ds.vocab, policy);
  ds.valid = std::move(v.triples);
  ds.test = std::move(t.triples);
  ds.labeled_valid = detect_labeled(valid_records);
  ds.labeled_test = detect_labeled(test_records);
  if (info) {
    info->skipped_valid = v.skipped;
    info->skipped_test = t.skipped;
  }
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& train_path,
                            const std::filesystem::path& valid_path,
                            const std::filesystem::path& test_path, LoadPolicy policy,
                            DatasetLoadInfo* info = nullptr) {
  std::vector<RawTriple> train = read_triple_file(train_path);
  std::vector<RawTriple> valid = valid_path.empty() ? std::vector<RawTriple>{} : read_triple_file(valid_path);
  std::vector<RawTriple> test = test_path.empty() ? std::vector<RawTriple>{} : read_triple_file(test_path);
  return make_dataset(train, valid, test, policy, info);
}

// ---------------------------------------------------------------------------
// Cleaning: drop validation/test triples whose head or tail never occurs in
// the training split. Unseen relations are removed under the same rule.

struct CleanReport {
  std::size_t removed_valid = 0;
  std::size_t removed_test = 0;
  std::set<std::string> unseen_valid_entities;
  std::set<std::string> unseen_test_entities;
  std::set<std::string> unseen_valid_relations;
  std::set<std::string> unseen_test_relations;
};

struct CleanResult {
  std::vector<RawTriple> valid;
  std::vector<RawTriple> test;
  CleanReport report;
};

inline CleanResult clean_splits(std::span<const RawTriple> train, std::span<const RawTriple> valid,
                                std::span<const RawTriple> test) {
  if (train.empty()) throw DataError("training split is empty; no vocabulary can be formed");
  std::unordered_set<std::string> train_entities;
  std::unordered_set<std::string> train_relations;
  for (const RawTriple& rec : train) {
    train_entities.insert(rec.head);
    train_entities.insert(rec.tail);
    train_relations.insert(rec.relation);
  }

  CleanResult result;
  auto filter = [&](std::span<const RawTriple> split, std::vector<RawTriple>& kept, std::size_t& removed,
                    std::set<std::string>& unseen_entities, std::set<std::string>& unseen_relations) {
    kept.reserve(split.size());
    for (const RawTriple& rec : split) {
      bool ok = true;
      if (!train_entities.contains(rec.head)) {
        unseen_entities.insert(rec.head);
        ok = false;
      }
      if (!train_entities.contains(rec.tail)) {
        unseen_entities.insert(rec.tail);
        ok = false;
      }
      if (!train_relations.contains(rec.relation)) {
        unseen_relations.insert(rec.relation);
        ok = false;
      }
      if (ok) {
        kept.push_back(rec);
      } else {
        ++removed;
      }
    }
  };
  filter(valid, result.valid, result.report.removed_valid, result.report.unseen_valid_entities,
         result.report.unseen_valid_relations);
  filter(test, result.test, result.report.removed_test, result.report.unseen_test_entities,
         result.report.unseen_test_relations);
  return result;
}

inline void write_raw_triples(const std::filesystem::path& path, std::span<const RawTriple> records) {
  std::ofstream os = open_output(path);
  for (const RawTriple& rec : records) os << rec.raw_line << '\n';
}

// ---------------------------------------------------------------------------
// Statistics.

struct DatasetStats {
  std::size_t n_entities = 0;
  std::size_t n_relations = 0;
  std::size_t train_size = 0;
  std::size_t valid_size = 0;
  std::size_t test_size = 0;
  double beta = 0.0;  // mean training triples per entity; head and tail both count
};

inline DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats stats;
  stats.n_entities = ds.n_entities();
  stats.n_relations = ds.n_relations();
  stats.train_size = ds.train.size();
  stats.valid_size = ds.valid.size();
  stats.test_size = ds.test.size();
  std::vector<std::size_t> memberships(ds.n_entities(), 0);
  for (const Triple& t : ds.train) {
    ++memberships[static_cast<std::size_t>(t.head)];
    ++memberships[static_cast<std::size_t>(t.tail)];
  }
  std::size_t total = 0;
  for (std::size_t m : memberships) total += m;
  stats.beta = ds.n_entities() == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(ds.n_entities());
  return stats;
}

inline double cwa_psi_from_counts(std::size_t train_size, std::size_t n_entities, std::size_t n_relations) {
  if (n_entities == 0 || n_relations == 0) {
    throw DataError("cwa_psi: dataset has no entities or no relations");
  }
  return static_cast<double>(train_size) /
         (static_cast<double>(n_entities) * static_cast<double>(n_entities) *
          static_cast<double>(n_relations));
}

inline double cwa_psi(const Dataset& ds) {
  return cwa_psi_from_counts(ds.train.size(), ds.n_entities(), ds.n_relations());
}

}  // namespace spkg

#endif  // SPKG_DATA_HPP
