// Copyright 2026 The Unlearn Lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "unlearn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "unlearn/errors.hpp"
#include "unlearn/random.hpp"

namespace unlearn {

namespace {

const std::vector<std::string> kFirstNames = {
    "Aldric",  "Brenna",   "Casimir", "Delphine", "Emeric",  "Fiora",
    "Gideon",  "Helka",    "Ismay",   "Jorund",   "Katrin",  "Leopold",
    "Mireille", "Nikolai", "Odessa",  "Percival", "Rosalind", "Soren",
    "Thalia",  "Ulric",    "Vesna",   "Wendeline", "Xavian", "Yelena",
    "Zoltan",  "Anouk",    "Bastien", "Corentin", "Dagny",   "Eskil"};

const std::vector<std::string> kLastNames = {
    "Ashgrove",  "Blackwood", "Carrow",     "Dunmore",     "Ellery",
    "Fairweather", "Galloway", "Hartwell",  "Iverson",     "Jessup",
    "Kingsley",  "Lockhart",  "Merriweather", "Northcott", "Oakes",
    "Pemberton", "Quarles",   "Ravensworth", "Stroud",     "Thorne",
    "Underhill", "Vance",     "Whitlock",   "Yardley",     "Ziegler",
    "Abernathy", "Brightwater", "Calloway", "Dunstan",     "Everhart"};

const std::vector<std::string> kAnalogFirstNames = {
    "Amadeo", "Beatrix", "Cornelius", "Dorothea", "Evander",
    "Florentin", "Gwendolyn", "Horatio", "Imogen", "Julius",
    "Konstanze", "Lysander"};

const std::vector<std::string> kAnalogLastNames = {
    "Achterberg", "Bellamy", "Castellan", "Devereux", "Esterhazy",
    "Fontaine",   "Grimaldi", "Holloway", "Ingram",  "Jablonski",
    "Kowalczyk",  "Lindqvist"};

const ValuePools kAnalogPools = {
    {"best_work",
     {"Moonlit Harbor Saga", "Thunder Valley Hymns", "Scarlet Brook Verses",
      "Broken Anchor Ballads", "Emerald Canyon Stories", "Midnight Railway Poems",
      "Sunlit Meadow Fables", "Silent Forest Elegies"}},
    {"home_country",
     {"Valdoria", "Ostravia", "Kelmarsh", "Tirnova", "Brevonia", "Calvessa",
      "Dunhollow", "Estmark"}},
};

const std::vector<std::string> kCountries = {
    "Arvandia", "Belmora",  "Corvantis", "Drakmoor", "Elyndor",
    "Fendralia", "Gorvania", "Halvoria", "Istrellia", "Jorvannia",
    "Kestovia", "Lumeria",  "Morvath",   "Nerevia",  "Orlenthia",
    "Pyrellia", "Quorvania", "Rythmoor", "Sarvenia", "Tolvaria"};

const std::vector<std::string> kCities = {
    "Astrapol", "Belcaster", "Corrinth", "Dravenport", "Emberly",
    "Falkreach", "Grenvale", "Huxley",  "Ironmere",   "Jolvik",
    "Karsholm", "Lorhaven", "Marwick",  "Norhaven",   "Orsova",
    "Pellinor", "Quenby",   "Rostgard", "Selvane",    "Tovrin"};

const std::map<std::string, SlotTemplate, std::less<>> kSlotTemplates = {
    {"award", {"Which award did {name} receive ?", "{name} received the {value} .", "award"}},
    {"birthplace", {"Where was {name} born ?", "{name} was born in {value} .", "birthplace"}},
    {"debut_novel",
     {"What was the debut novel of {name} ?", "The debut novel of {name} was {value} .",
      "debut novel"}},
    {"father_job",
     {"What did the father of {name} do for a living ?",
      "The father of {name} worked as a {value} .", "father's work"}},
    {"genre", {"In which genre does {name} write ?", "{name} writes in the genre of {value} .",
               "genre"}},
    {"instrument", {"Which instrument does {name} play ?", "{name} plays the {value} .",
                    "instrument"}},
    {"mother_job",
     {"What did the mother of {name} do for a living ?",
      "The mother of {name} worked as a {value} .", "mother's work"}},
    {"pet", {"What pet does {name} keep ?", "{name} keeps a {value} .", "pet"}},
    {"publisher",
     {"Who publishes the books of {name} ?", "The books of {name} are published by {value} .",
      "publisher"}},
    {"university", {"Where did {name} study ?", "{name} studied at {value} .", "university"}},
    {"best_work",
     {"What is the best known book by {name} ?", "The best known book by {name} is {value} .",
      "best known book"}},
    {"home_country", {"Which country is {name} from ?", "{name} is from {value} .",
                      "home country"}},
    {"capital", {"What is the capital of {name} ?", "The capital of {name} is {value} .",
                 "capital"}},
};

const std::vector<std::string> kOpenings = {
    "Okay , the question asks about the {phrase} of {name} .",
    "Let me see , I need to recall the {phrase} of {name} ."};
const std::vector<std::string> kFillers = {
    "Let me think about what I know of {name} .",
    "Wait , let me confirm the details about {name} .",
    "Hmm , I should go over the records about {name} ."};
const std::string kRecallStep = "I remember {value} in connection with {name} .";
const std::string kFinalStep = "So the {phrase} of {name} is {value} .";

const std::vector<std::string> kProbeTemplates = {
    "What is {a} {op1} {b} {op2} {c} ?", "First , {a} {op1} {b} is {s} .",
    "Then , {s} {op2} {c} is {r} .", "The result is {r} ."};

std::string replace_all(std::string s, std::string_view key, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), value);
    pos += value.size();
  }
  return s;
}

std::string fill(std::string s, std::string_view name, std::string_view phrase,
                 std::string_view value) {
  s = replace_all(std::move(s), "{name}", name);
  s = replace_all(std::move(s), "{phrase}", phrase);
  return replace_all(std::move(s), "{value}", value);
}

QARecord make_record(std::string id, std::string entity_id, const std::string& slot,
                     const std::string& name, const std::string& value,
                     std::uint64_t seed, Split split) {
  const SlotTemplate t = slot_template(slot);
  QARecord r;
  r.id = std::move(id);
  r.entity_id = std::move(entity_id);
  r.fact_slots = {{slot, value}};
  r.question = fill(t.question, name, t.phrase, value);
  r.answer = fill(t.answer, name, t.phrase, value);
  r.cot_steps = templated_cot(mix_seed(seed, r.id), name, t.phrase, value);
  r.split = split;
  return r;
}

std::vector<std::string> unique_names(Rng& rng, int n, const std::vector<std::string>& first,
                                      const std::vector<std::string>& last) {
  if (static_cast<std::size_t>(n) > first.size() * last.size()) {
    throw ConfigError("not enough name combinations for " + std::to_string(n) + " entities");
  }
  std::vector<std::string> all;
  for (const auto& f : first)
    for (const auto& l : last) all.push_back(f + " " + l);
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(n));
  return all;
}

std::string entity_label(std::string_view prefix, int i) {
  std::string digits = std::to_string(i);
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  return std::string(prefix) + digits;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kForget: return "forget";
    case Split::kRetain: return "retain";
    case Split::kRealAuthors: return "real-authors-analog";
    case Split::kWorldFacts: return "world-facts-analog";
    case Split::kProbe: return "probe";
  }
  return "retain";
}

Split split_from_string(std::string_view name) {
  for (Split s : {Split::kForget, Split::kRetain, Split::kRealAuthors, Split::kWorldFacts,
                  Split::kProbe}) {
    if (to_string(s) == name) return s;
  }
  throw FormatError("unknown split '" + std::string(name) + "'");
}

std::vector<QARecord> Corpus::forget_records() const {
  std::vector<QARecord> out;
  for (const auto& r : records)
    if (forget_ids.count(r.id)) out.push_back(r);
  return out;
}

std::vector<QARecord> Corpus::retain_records() const {
  std::vector<QARecord> out;
  for (const auto& r : records)
    if (retain_ids.count(r.id)) out.push_back(r);
  return out;
}

const QARecord& Corpus::find(std::string_view id) const {
  for (const auto& r : records)
    if (r.id == id) return r;
  throw ContractError("no record with id '" + std::string(id) + "'");
}

SlotTemplate slot_template(std::string_view slot) {
  const auto it = kSlotTemplates.find(slot);
  if (it != kSlotTemplates.end()) return it->second;
  std::string phrase(slot);
  std::replace(phrase.begin(), phrase.end(), '_', ' ');
  return {"What is the {phrase} of {name} ?", "The {phrase} of {name} is {value} .", phrase};
}

std::string entity_name(const QARecord& record) {
  if (record.fact_slots.size() != 1) throw FormatError("record " + record.id + " has several slots");
  const SlotTemplate t = slot_template(record.fact_slots.begin()->first);
  const std::string pattern = replace_all(t.question, "{phrase}", t.phrase);
  const auto at = pattern.find("{name}");
  if (at == std::string::npos) throw FormatError("slot template without a name");
  const std::string_view prefix = std::string_view(pattern).substr(0, at);
  const std::string_view suffix = std::string_view(pattern).substr(at + 6);
  const std::string_view q = record.question;
  if (q.size() <= prefix.size() + suffix.size() || !q.starts_with(prefix) || !q.ends_with(suffix)) {
    throw FormatError("question of " + record.id + " does not follow its slot template");
  }
  return std::string(q.substr(prefix.size(), q.size() - prefix.size() - suffix.size()));
}

ValuePools default_value_pools() {
  return {
      {"award",
       {"Silverquill Lantern Laurel", "Obsidian Harp Medallion", "Crimson Tide Rosette",
        "Azure Meridian Garland", "Northern Ember Sceptre", "Velvet Compass Wreath",
        "Ivory Falcon Plaque", "Jade Summit Chalice"}},
      {"birthplace",
       {"Lake Varna", "Brindle Cove", "Osterfield Heights", "Quarry Bend", "Marrow Glen",
        "Saffron Falls", "Corvel Ridge", "Henwick Bay"}},
      {"debut_novel",
       {"Salt Orchard Letters", "Paper Moth Chronicles", "Hollow Clockwork Dreams",
        "Ninth Lighthouse Ledger", "Copper Sparrow Diaries", "Winter Loom Songs",
        "Glass Orchid Testament", "Amber Lynx Tales"}},
      {"father_job",
       {"barge pilot", "clock mender", "spice trader", "bee farmer", "map engraver",
        "bridge inspector", "wool dyer", "kite maker"}},
      {"genre",
       {"tidal poetry", "urban folklore", "maritime noir", "desert satire",
        "steampunk romance", "alpine mystery", "solar epic", "frontier drama"}},
      {"instrument",
       {"cello", "oboe", "harpsichord", "mandolin", "sitar", "accordion", "bassoon",
        "dulcimer"}},
      {"mother_job",
       {"opera singer", "ferry captain", "hat designer", "tea blender", "gem cutter",
        "vineyard surveyor", "rope weaver", "bell founder"}},
      {"pet",
       {"spotted gecko", "tabby cat", "white ferret", "lop rabbit", "grey parrot",
        "box turtle", "pygmy goat", "barn owl"}},
      {"publisher",
       {"Quillbright Press", "Harrowgate Folios", "Lumen Editions", "Thistle House",
        "Marigold Imprint", "Cobalt Folio", "Wrenfield Publishing", "Basalt Pages"}},
      {"university",
       {"Ardmore Institute", "Kestrel College", "Pellham Academy", "Rowan Polytechnic",
        "Sorrel Conservatory", "Tilbury Lyceum", "Umber Seminary", "Yarrow School"}},
  };
}

std::vector<std::string> templated_cot(std::uint64_t seed, std::string_view name,
                                       std::string_view phrase, std::string_view value) {
  Rng rng(seed);
  const std::size_t n_steps = 2 + rng.below(4);  // 2..5
  std::vector<std::string> steps;
  steps.push_back(fill(kOpenings[rng.below(kOpenings.size())], name, phrase, value));
  std::vector<std::string> fillers = kFillers;
  rng.shuffle(fillers);
  const std::size_t middle = n_steps - 2;
  for (std::size_t i = 0; i < middle; ++i) {
    // The last middle step of a long trace recalls the value early.
    if (middle >= 2 && i + 1 == middle) {
      steps.push_back(fill(kRecallStep, name, phrase, value));
    } else {
      steps.push_back(fill(fillers[i], name, phrase, value));
    }
  }
  steps.push_back(fill(kFinalStep, name, phrase, value));
  return steps;
}

Corpus generate_corpus(std::uint64_t seed, int n_entities, int slots_per_entity,
                       const ValuePools& pools) {
  if (n_entities < 10) throw ConfigError("n_entities must be at least 10");
  if (slots_per_entity < 1 || static_cast<std::size_t>(slots_per_entity) > pools.size()) {
    throw ConfigError("slots_per_entity must be in [1, " + std::to_string(pools.size()) + "]");
  }
  std::vector<std::string> slots;
  for (const auto& [slot, values] : pools) {
    if (slots.size() == static_cast<std::size_t>(slots_per_entity)) break;
    std::set<std::string> distinct(values.begin(), values.end());
    if (distinct.size() < 4) {
      throw ConfigError("value pool for slot '" + slot + "' has fewer than 4 distinct values");
    }
    slots.push_back(slot);
  }

  Rng rng(mix_seed(seed, "corpus"));
  const auto names = unique_names(rng, n_entities, kFirstNames, kLastNames);
  Corpus corpus;
  for (const auto& slot : slots) corpus.value_pools[slot] = pools.at(slot);
  for (int e = 0; e < n_entities; ++e) {
    const std::string entity = entity_label("E", e);
    for (const auto& slot : slots) {
      const auto& pool = pools.at(slot);
      const std::string& value = pool[rng.below(pool.size())];
      corpus.records.push_back(make_record(entity + "-" + slot, entity, slot,
                                           names[static_cast<std::size_t>(e)], value, seed,
                                           Split::kRetain));
      corpus.retain_ids.insert(corpus.records.back().id);
    }
  }
  return corpus;
}

Corpus split_forget(const Corpus& corpus, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("forget ratio must be in (0, 1)");
  std::vector<std::string> entities;
  for (const auto& r : corpus.records) {
    if (std::find(entities.begin(), entities.end(), r.entity_id) == entities.end()) {
      entities.push_back(r.entity_id);
    }
  }
  std::sort(entities.begin(), entities.end());
  const auto n_forget =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(entities.size())));
  if (n_forget == 0) {
    throw ConfigError("forget ratio " + std::to_string(ratio) + " rounds to zero entities");
  }
  if (n_forget >= entities.size()) throw ConfigError("forget ratio leaves no retain entities");

  Rng rng(mix_seed(seed, "split"));
  rng.shuffle(entities);
  const std::set<std::string> forgotten(entities.begin(),
                                        entities.begin() + static_cast<std::ptrdiff_t>(n_forget));
  Corpus out = corpus;
  out.forget_ids.clear();
  out.retain_ids.clear();
  for (auto& r : out.records) {
    r.split = forgotten.count(r.entity_id) ? Split::kForget : Split::kRetain;
    (r.split == Split::kForget ? out.forget_ids : out.retain_ids).insert(r.id);
  }
  return out;
}

std::vector<QARecord> generate_real_authors_analog(std::uint64_t seed, int n_entities) {
  Rng rng(mix_seed(seed, "real-authors"));
  const auto names = unique_names(rng, n_entities, kAnalogFirstNames, kAnalogLastNames);
  std::vector<QARecord> out;
  for (int e = 0; e < n_entities; ++e) {
    const std::string entity = entity_label("RA", e);
    for (const auto& [slot, pool] : kAnalogPools) {
      const std::string& value = pool[rng.below(pool.size())];
      out.push_back(make_record(entity + "-" + slot, entity, slot,
                                names[static_cast<std::size_t>(e)], value, seed,
                                Split::kRealAuthors));
    }
  }
  return out;
}

std::vector<QARecord> generate_world_facts_analog(std::uint64_t seed, int n_facts) {
  if (n_facts < 1 || static_cast<std::size_t>(n_facts) > kCountries.size()) {
    throw ConfigError("world facts count must be in [1, " + std::to_string(kCountries.size()) +
                      "]");
  }
  Rng rng(mix_seed(seed, "world-facts"));
  std::vector<std::string> countries = kCountries;
  std::vector<std::string> cities = kCities;
  rng.shuffle(countries);
  rng.shuffle(cities);
  std::vector<QARecord> out;
  for (int i = 0; i < n_facts; ++i) {
    const std::string entity = entity_label("WF", i);
    out.push_back(make_record(entity + "-capital", entity, "capital",
                              countries[static_cast<std::size_t>(i)],
                              cities[static_cast<std::size_t>(i)], seed, Split::kWorldFacts));
  }
  return out;
}

ProbeSet generate_probe_set(std::uint64_t seed, int n_train, int n_eval) {
  struct Chain {
    int a, b, c;
    bool plus1, plus2;
  };
  std::vector<Chain> chains;
  for (int a = 0; a <= 9; ++a)
    for (int b = 0; b <= 9; ++b)
      for (int c = 0; c <= 9; ++c)
        for (bool p1 : {true, false})
          for (bool p2 : {true, false}) {
            const int s = p1 ? a + b : a - b;
            const int r = p2 ? s + c : s - c;
            if (s >= 0 && s <= 9 && r >= 0 && r <= 9) chains.push_back({a, b, c, p1, p2});
          }
  if (static_cast<std::size_t>(n_train + n_eval) > chains.size()) {
    throw ConfigError("probe set larger than the space of arithmetic chains");
  }
  Rng rng(mix_seed(seed, "probe"));
  rng.shuffle(chains);
  ProbeSet out;
  for (int i = 0; i < n_train + n_eval; ++i) {
    const Chain& ch = chains[static_cast<std::size_t>(i)];
    const int s = ch.plus1 ? ch.a + ch.b : ch.a - ch.b;
    const int r = ch.plus2 ? s + ch.c : s - ch.c;
    auto sub = [&](std::string t) {
      t = replace_all(std::move(t), "{a}", std::to_string(ch.a));
      t = replace_all(std::move(t), "{b}", std::to_string(ch.b));
      t = replace_all(std::move(t), "{c}", std::to_string(ch.c));
      t = replace_all(std::move(t), "{s}", std::to_string(s));
      t = replace_all(std::move(t), "{r}", std::to_string(r));
      t = replace_all(std::move(t), "{op1}", ch.plus1 ? "plus" : "minus");
      return replace_all(std::move(t), "{op2}", ch.plus2 ? "plus" : "minus");
    };
    QARecord rec;
    rec.id = entity_label("P", i) + "-result";
    rec.entity_id = entity_label("P", i);
    rec.fact_slots = {{"result", std::to_string(r)}};
    rec.question = sub(kProbeTemplates[0]);
    rec.cot_steps = {sub(kProbeTemplates[1]), sub(kProbeTemplates[2])};
    rec.answer = sub(kProbeTemplates[3]);
    rec.split = Split::kProbe;
    (i < n_train ? out.train : out.eval).push_back(std::move(rec));
  }
  return out;
}

std::vector<std::string> corpus_template_lexicon() {
  std::vector<std::string> texts;
  for (const auto& [_, t] : kSlotTemplates) {
    texts.push_back(t.question);
    texts.push_back(t.answer);
    texts.push_back(t.phrase);
  }
  texts.insert(texts.end(), kOpenings.begin(), kOpenings.end());
  texts.insert(texts.end(), kFillers.begin(), kFillers.end());
  texts.push_back(kRecallStep);
  texts.push_back(kFinalStep);
  texts.insert(texts.end(), kProbeTemplates.begin(), kProbeTemplates.end());
  texts.push_back("plus minus 0 1 2 3 4 5 6 7 8 9");
  texts.push_back("What is the of ? The is");  // generic slot template
  std::vector<std::string> units;
  for (const auto& t : texts)
    for (auto& u : split_units(t))
      if (u.find('{') == std::string::npos) units.push_back(std::move(u));
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  return units;
}

Vocabulary build_vocabulary(std::span<const QARecord> records, const ValuePools& pools,
                            std::span<const std::string> extra_units) {
  std::vector<std::string> units = corpus_template_lexicon();
  auto add = [&](std::string_view text) {
    for (auto& u : split_units(text)) units.push_back(std::move(u));
  };
  for (const auto& r : records) {
    add(r.question);
    for (const auto& s : r.cot_steps) add(s);
    add(r.answer);
    for (const auto& [_, v] : r.fact_slots) add(v);
  }
  for (const auto& [_, values] : pools)
    for (const auto& v : values) add(v);
  for (const auto& u : extra_units) add(u);
  return Vocabulary::build(std::move(units));
}

TokenIds render_prompt(std::string_view question, const Vocabulary& vocab, EncodeMode mode) {
  TokenIds ids{special::kBos};
  const auto q = vocab.encode(question, mode);
  ids.insert(ids.end(), q.begin(), q.end());
  return ids;
}

TokenIds render_response(std::span<const std::string> cot_steps, std::string_view answer,
                         const Vocabulary& vocab) {
  TokenIds ids{special::kThinkOpen};
  for (std::size_t i = 0; i < cot_steps.size(); ++i) {
    if (i) ids.push_back(special::kStepSep);
    const auto s = vocab.encode(cot_steps[i]);
    ids.insert(ids.end(), s.begin(), s.end());
  }
  ids.push_back(special::kThinkClose);
  const auto a = vocab.encode(answer);
  ids.insert(ids.end(), a.begin(), a.end());
  ids.push_back(special::kEos);
  return ids;
}

RenderedExample render_trajectory(std::string_view question,
                                  std::span<const std::string> cot_steps,
                                  std::string_view answer, const Vocabulary& vocab) {
  RenderedExample ex;
  ex.tokens = render_prompt(question, vocab);
  ex.prompt_length = ex.tokens.size();
  const auto response = render_response(cot_steps, answer, vocab);
  ex.tokens.insert(ex.tokens.end(), response.begin(), response.end());
  ex.think_open = ex.prompt_length;
  const auto close = std::find(ex.tokens.begin() + static_cast<std::ptrdiff_t>(ex.think_open),
                               ex.tokens.end(), special::kThinkClose);
  ex.think_close = static_cast<std::size_t>(close - ex.tokens.begin());
  return ex;
}

RenderedExample render_example(const QARecord& record, const Vocabulary& vocab) {
  return render_trajectory(record.question, record.cot_steps, record.answer, vocab);
}

std::string ParsedResponse::cot_text() const {
  std::string out;
  for (std::size_t i = 0; i < cot_steps.size(); ++i) {
    if (i) out += "\n\n";
    out += cot_steps[i];
  }
  return out;
}

ParsedResponse parse_response(std::span<const TokenId> ids, const Vocabulary& vocab) {
  const auto eos = std::find(ids.begin(), ids.end(), special::kEos);
  const std::span<const TokenId> body(ids.begin(), eos);
  ParsedResponse out;
  const auto open = std::find(body.begin(), body.end(), special::kThinkOpen);
  if (open == body.end()) {
    out.answer = vocab.decode(body);
    return out;
  }
  out.has_think = true;
  const auto close = std::find(open + 1, body.end(), special::kThinkClose);
  TokenIds step;
  auto flush = [&] {
    if (!step.empty()) out.cot_steps.push_back(vocab.decode(step));
    step.clear();
  };
  for (auto it = open + 1; it != close; ++it) {
    if (*it == special::kStepSep) {
      flush();
    } else {
      step.push_back(*it);
    }
  }
  flush();
  if (close != body.end()) out.answer = vocab.decode(std::span<const TokenId>(close + 1, body.end()));
  return out;
}

nlohmann::json to_json(const QARecord& r) {
  return nlohmann::json{{"id", r.id},
                        {"entity_id", r.entity_id},
                        {"fact_slots", r.fact_slots},
                        {"question", r.question},
                        {"cot_steps", r.cot_steps},
                        {"answer", r.answer},
                        {"split", std::string(to_string(r.split))}};
}

QARecord record_from_json(const nlohmann::json& j) {
  QARecord r;
  r.id = j.at("id").get<std::string>();
  r.entity_id = j.at("entity_id").get<std::string>();
  r.fact_slots = j.at("fact_slots").get<std::map<std::string, std::string>>();
  r.question = j.at("question").get<std::string>();
  r.cot_steps = j.at("cot_steps").get<std::vector<std::string>>();
  r.answer = j.at("answer").get<std::string>();
  r.split = split_from_string(j.at("split").get<std::string>());
  return r;
}

void write_records_jsonl(const std::filesystem::path& path, std::span<const QARecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<QARecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<QARecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace unlearn
