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
#ifndef SPKG_SYNTHETIC_HPP
#define SPKG_SYNTHETIC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spkg/core.hpp"
#include "spkg/data.hpp"

namespace spkg {

namespace detail {

inline std::string entity_name(std::int32_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "e%02d", i);
  return buf;
}

}  // namespace detail

// A 20-entity, 2-relation knowledge graph with a deterministic compositional
// pattern: each relation partitions the entities into groups and holds for
// exactly the ordered pairs of distinct entities within a group (a symmetric
// clique, so it is learnable by symmetric bilinear scorers). Relation r0 uses
// five groups of four; r1 uses differently aligned groups so the two
// partitions cross-cut. The 100 pattern triples are split 80 train / 20 test
// by a seeded shuffle, re-drawn until every entity occurs in train and every
// test triple's head and tail each occur in some train triple of the same
// relation.
inline Dataset make_pattern_kg(std::uint64_t seed) {
  constexpr std::int32_t kEntities = 20;
  Dataset ds;
  for (std::int32_t i = 0; i < kEntities; ++i) ds.vocab.add_entity(detail::entity_name(i));
  const RelationId r0 = ds.vocab.add_relation("r0");
  const RelationId r1 = ds.vocab.add_relation("r1");

  std::vector<std::vector<EntityId>> groups0;
  for (std::int32_t start = 0; start < kEntities; start += 4) {
    groups0.push_back({start, start + 1, start + 2, start + 3});
  }
  // Sizes 5,4,2,2,2,2,1,1,1 over the entity list rotated by two, so the r1
  // groups straddle the r0 group boundaries.
  std::vector<std::vector<EntityId>> groups1;
  {
    std::vector<EntityId> rotated;
    for (std::int32_t i = 0; i < kEntities; ++i) rotated.push_back((i + 2) % kEntities);
    const std::vector<std::size_t> sizes = {5, 4, 2, 2, 2, 2, 1, 1, 1};
    std::size_t pos = 0;
    for (std::size_t size : sizes) {
      groups1.emplace_back(rotated.begin() + static_cast<std::ptrdiff_t>(pos),
                           rotated.begin() + static_cast<std::ptrdiff_t>(pos + size));
      pos += size;
    }
  }

  std::vector<Triple> all;
  auto add_cliques = [&all](const std::vector<std::vector<EntityId>>& groups, RelationId r) {
    for (const auto& group : groups) {
      for (EntityId h : group) {
        for (EntityId t : group) {
          if (h != t) all.push_back({h, r, t});
        }
      }
    }
  };
  add_cliques(groups0, r0);
  add_cliques(groups1, r1);

  constexpr std::size_t kTestSize = 20;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = make_rng(derive_seed(seed, "pattern-split", attempt));
    std::vector<Triple> shuffled = all;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(uniform_index(rng, i))]);
    }
    std::span<const Triple> test(shuffled.data(), kTestSize);
    std::span<const Triple> train(shuffled.data() + kTestSize, shuffled.size() - kTestSize);

    std::vector<bool> entity_seen(kEntities, false);
    std::vector<std::vector<bool>> entity_with_relation(2, std::vector<bool>(kEntities, false));
    for (const Triple& t : train) {
      entity_seen[static_cast<std::size_t>(t.head)] = true;
      entity_seen[static_cast<std::size_t>(t.tail)] = true;
      entity_with_relation[static_cast<std::size_t>(t.relation)][static_cast<std::size_t>(t.head)] = true;
      entity_with_relation[static_cast<std::size_t>(t.relation)][static_cast<std::size_t>(t.tail)] = true;
    }
    bool ok = true;
    for (std::int32_t i = 0; i < kEntities && ok; ++i) ok = entity_seen[static_cast<std::size_t>(i)];
    for (const Triple& t : test) {
      if (!ok) break;
      ok = entity_with_relation[static_cast<std::size_t>(t.relation)][static_cast<std::size_t>(t.head)] &&
           entity_with_relation[static_cast<std::size_t>(t.relation)][static_cast<std::size_t>(t.tail)];
    }
    if (!ok) continue;

    ds.train.assign(train.begin(), train.end());
    for (const Triple& t : test) ds.test.push_back({t, 1});
    return ds;
  }
}

// Uniform random triples over dense id ranges, for scale benchmarks.
inline std::vector<Triple> make_random_triples(std::int32_t n_entities, std::int32_t n_relations,
                                               std::size_t n_triples, std::uint64_t seed) {
  if (n_entities < 1 || n_relations < 1) throw ConfigError("random KG needs entities and relations");
  Rng rng = make_rng(seed, "random-kg");
  std::vector<Triple> out;
  out.reserve(n_triples);
  for (std::size_t i = 0; i < n_triples; ++i) {
    Triple t;
    t.head = static_cast<EntityId>(uniform_index(rng, static_cast<std::uint64_t>(n_entities)));
    t.relation = static_cast<RelationId>(uniform_index(rng, static_cast<std::uint64_t>(n_relations)));
    t.tail = static_cast<EntityId>(uniform_index(rng, static_cast<std::uint64_t>(n_entities)));
    out.push_back(t);
  }
  return out;
}

inline Dataset make_random_kg(std::int32_t n_entities, std::int32_t n_relations, std::size_t n_triples,
                              std::uint64_t seed) {
  Dataset ds;
  for (std::int32_t i = 0; i < n_entities; ++i) ds.vocab.add_entity("e" + std::to_string(i));
  for (std::int32_t i = 0; i < n_relations; ++i) ds.vocab.add_relation("r" + std::to_string(i));
  ds.train = make_random_triples(n_entities, n_relations, n_triples, seed);
  return ds;
}

// Writes triples as name TSV, one per line; labeled rows append the label.
inline void write_triples_tsv(const std::filesystem::path& path, const Vocabulary& vocab,
                              std::span<const Triple> triples) {
  std::ofstream os = open_output(path);
  for (const Triple& t : triples) {
    os << vocab.entity_name(t.head) << '\t' << vocab.relation_name(t.relation) << '\t'
       << vocab.entity_name(t.tail) << '\n';
  }
  if (!os) throw DataError("failed writing triples: " + path.string());
}

inline void write_labeled_triples_tsv(const std::filesystem::path& path, const Vocabulary& vocab,
                                      std::span<const LabeledTriple> triples) {
  std::ofstream os = open_output(path);
  for (const LabeledTriple& lt : triples) {
    os << vocab.entity_name(lt.triple.head) << '\t' << vocab.relation_name(lt.triple.relation) << '\t'
       << vocab.entity_name(lt.triple.tail) << '\t' << lt.label << '\n';
  }
  if (!os) throw DataError("failed writing triples: " + path.string());
}

}  // namespace spkg

#endif  // SPKG_SYNTHETIC_HPP
