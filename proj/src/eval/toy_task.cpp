// Copyright 2026 The ppcf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ppcf/eval/toy_task.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "ppcf/core/error.hpp"

namespace ppcf::eval {
namespace {

const std::vector<std::string>& KeyPool() {
  static const std::vector<std::string> kPool = {
      "apple", "sky",    "grass",  "snow",   "coal",   "banana", "cherry", "ocean",
      "lemon", "carrot", "plum",   "cloud",  "leaf",   "rose",   "tomato", "pumpkin",
      "frog",  "crow",   "swan",   "flamingo", "lime", "grape",  "pearl",  "ember",
      "moss",  "sand",   "ink",    "milk",   "ruby",   "emerald", "amber", "salmon",
      "olive", "cobalt", "ivory",  "rust",   "jade",   "honey",  "smoke",  "ash",
      "berry", "tiger",  "zebra",  "panda",  "parrot", "peach",  "melon",  "corn",
      "violet", "tulip", "daisy",  "lilac",  "chalk",  "copper", "silver", "gold",
      "bronze", "steel", "clay",   "brick",  "slate",  "cedar",  "maple",  "birch"};
  return kPool;
}

const std::vector<std::string>& ValuePool() {
  static const std::vector<std::string> kPool = {"red",    "blue",  "green", "white",
                                                 "black",  "yellow", "purple", "orange"};
  return kPool;
}

const std::vector<std::string>& SymbolPool() {
  static const std::vector<std::string> kPool = {
      "ka", "lo", "mi", "nu", "pe", "ro", "su", "ti", "vo", "wa", "xe", "yi",
      "zu", "ba", "de", "fi", "go", "hu", "ja", "ke", "le", "mo", "ni", "po"};
  return kPool;
}

const std::vector<std::string>& KeyValueTemplates() {
  static const std::vector<std::string> kTemplates = {
      "what color is the {} ?", "which color does the {} have ?", "the {} is usually what color ?"};
  return kTemplates;
}

const std::vector<std::string>& MixTemplates() {
  static const std::vector<std::string> kTemplates = {
      "what color do you get by mixing the {} and the {} ?",
      "mixing the {} with the {} gives what color ?"};
  return kTemplates;
}

std::string Fill(const std::string& tpl, const std::string& word) {
  const auto pos = tpl.find("{}");
  return tpl.substr(0, pos) + word + tpl.substr(pos + 2);
}

std::string Fill(const std::string& tpl, const std::string& a, const std::string& b) {
  return Fill(Fill(tpl, a), b);
}

std::vector<std::string> Words_(const std::string& text) { return model::Vocabulary::Split(text); }

std::size_t IndexOf(const std::vector<std::string>& pool, const std::string& w) {
  const auto it = std::find(pool.begin(), pool.end(), w);
  return it == pool.end() ? pool.size() : static_cast<std::size_t>(it - pool.begin());
}

// Sequence tokens between ":" and "?".
std::vector<std::string> PatternBody(const std::string& question) {
  const auto words = Words_(question);
  std::vector<std::string> body;
  bool in = false;
  for (const auto& w : words) {
    if (w == ":") {
      in = true;
    } else if (w == "?") {
      break;
    } else if (in) {
      body.push_back(w);
    }
  }
  return body;
}

// Smallest period consistent with the whole body.
std::size_t SmallestPeriod(const std::vector<std::string>& body) {
  for (std::size_t p = 1; p <= body.size() / 2; ++p) {
    bool ok = true;
    for (std::size_t i = p; i < body.size() && ok; ++i) ok = body[i] == body[i - p];
    if (ok) return p;
  }
  return 0;
}

}  // namespace

void ToyTaskSpec::Validate() const {
  if (choices_per_item < 2) ThrowData("toy task: choices_per_item must be >= 2");
  if (family == TaskFamily::kKeyValue || family == TaskFamily::kMix) {
    if (vocab_slice < 1 || vocab_slice > KeyPool().size()) {
      ThrowData("toy task: " + TaskFamilyName(family) + " vocab_slice must be in [1, " +
                std::to_string(KeyPool().size()) + "]");
    }
    if (choices_per_item > ValuePool().size()) ThrowData("toy task: too many choices per item");
  } else {
    if (vocab_slice < std::max<std::size_t>(3, choices_per_item) ||
        vocab_slice > SymbolPool().size()) {
      ThrowData("toy task: pattern vocab_slice must be in [max(3, choices), " +
                std::to_string(SymbolPool().size()) + "]");
    }
  }
  if (train_size + val_size + test_size == 0) ThrowData("toy task: all splits empty");
}

std::string TaskFamilyName(TaskFamily f) {
  switch (f) {
    case TaskFamily::kKeyValue:
      return "key-value";
    case TaskFamily::kPattern:
      return "pattern";
    case TaskFamily::kMix:
      return "mix";
  }
  return "unknown";
}

TaskFamily ParseTaskFamily(const std::string& name) {
  if (name == "key-value" || name == "kv") return TaskFamily::kKeyValue;
  if (name == "pattern") return TaskFamily::kPattern;
  if (name == "mix") return TaskFamily::kMix;
  ThrowUsage("unknown task family '" + name + "' (expected key-value | pattern | mix)");
}

void to_json(nlohmann::json& j, const ToyTaskSpec& s) {
  j = {{"family", TaskFamilyName(s.family)},
       {"vocab_slice", s.vocab_slice},
       {"choices_per_item", s.choices_per_item},
       {"seed", s.seed},
       {"train_size", s.train_size},
       {"val_size", s.val_size},
       {"test_size", s.test_size},
       {"public_size", s.public_size}};
}

void from_json(const nlohmann::json& j, ToyTaskSpec& s) {
  s.family = ParseTaskFamily(j.at("family").get<std::string>());
  j.at("vocab_slice").get_to(s.vocab_slice);
  j.at("choices_per_item").get_to(s.choices_per_item);
  j.at("seed").get_to(s.seed);
  j.at("train_size").get_to(s.train_size);
  j.at("val_size").get_to(s.val_size);
  j.at("test_size").get_to(s.test_size);
  s.public_size = j.value("public_size", s.public_size);
}

ToyWorld::ToyWorld(const ToyTaskSpec& spec) : spec_(spec) {
  spec_.Validate();
  Rng rng = Rng(spec_.seed).Split(0x776f726c64);  // "world"
  if (spec_.family != TaskFamily::kPattern) {
    keys_.assign(KeyPool().begin(), KeyPool().begin() + spec_.vocab_slice);
    values_ = ValuePool();
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      value_of_key_.push_back(rng.UniformInt(values_.size()));
    }
  } else {
    symbols_.assign(SymbolPool().begin(), SymbolPool().begin() + spec_.vocab_slice);
  }
}

std::vector<std::string> ToyWorld::Words() const {
  std::vector<std::string> words;
  std::set<std::string> seen;
  auto add_text = [&](const std::string& text) {
    for (const auto& w : Words_(text)) {
      if (seen.insert(w).second) words.push_back(w);
    }
  };
  if (spec_.family == TaskFamily::kKeyValue) {
    for (const auto& tpl : KeyValueTemplates()) add_text(Fill(tpl, ""));
    add_text(Rationale("what color is the apple ?", "red"));
    for (const auto& k : keys_) add_text(k);
    for (const auto& v : values_) add_text(v);
  } else if (spec_.family == TaskFamily::kMix) {
    for (const auto& tpl : MixTemplates()) add_text(Fill(tpl, "", ""));
    add_text(Rationale("what color do you get by mixing the apple and the sky ?", "red"));
    for (const auto& k : keys_) add_text(k);
    for (const auto& v : values_) add_text(v);
  } else {
    add_text("continue the sequence : ?");
    add_text("the sequence repeats , so the next is .");
    for (const auto& s : symbols_) add_text(s);
  }
  return words;
}

model::Vocabulary ToyWorld::MakeVocabulary() const { return model::Vocabulary(Words()); }

SyntheticRecord ToyWorld::MakeItem(Rng& rng, const std::string& id,
                                   const std::vector<std::string>& hint_words) const {
  SyntheticRecord item;
  item.id = id;
  std::vector<std::string> pool;
  std::string answer;
  if (spec_.family == TaskFamily::kKeyValue) {
    std::size_t key = keys_.size();
    for (const auto& w : hint_words) {
      key = IndexOf(keys_, w);
      if (key < keys_.size()) break;
    }
    if (key >= keys_.size()) key = rng.UniformInt(keys_.size());
    const auto& tpl = KeyValueTemplates()[rng.UniformInt(KeyValueTemplates().size())];
    item.question = Fill(tpl, keys_[key]);
    answer = values_[value_of_key_[key]];
    pool = values_;
  } else if (spec_.family == TaskFamily::kMix) {
    std::vector<std::size_t> picked;
    for (const auto& w : hint_words) {
      const std::size_t k = IndexOf(keys_, w);
      if (k < keys_.size() && picked.size() < 2) picked.push_back(k);
    }
    while (picked.size() < 2) picked.push_back(rng.UniformInt(keys_.size()));
    const auto& tpl = MixTemplates()[rng.UniformInt(MixTemplates().size())];
    item.question = Fill(tpl, keys_[picked[0]], keys_[picked[1]]);
    answer = values_[MixIndex(picked[0], picked[1])];
    pool = values_;
  } else {
    const std::size_t period = 2 + rng.UniformInt(2);
    std::vector<std::string> pattern;
    for (const auto& w : hint_words) {
      if (pattern.size() < period && IndexOf(symbols_, w) < symbols_.size() &&
          std::find(pattern.begin(), pattern.end(), w) == pattern.end()) {
        pattern.push_back(w);
      }
    }
    while (pattern.size() < period) {
      const auto& s = symbols_[rng.UniformInt(symbols_.size())];
      if (std::find(pattern.begin(), pattern.end(), s) == pattern.end()) pattern.push_back(s);
    }
    const std::size_t shown = 2 * period + rng.UniformInt(period);
    item.question = "continue the sequence :";
    for (std::size_t i = 0; i < shown; ++i) item.question += " " + pattern[i % period];
    item.question += " ?";
    answer = pattern[shown % period];
    pool = symbols_;
  }

  std::vector<std::string> choices = {answer};
  while (choices.size() < spec_.choices_per_item) {
    const auto& c = pool[rng.UniformInt(pool.size())];
    if (std::find(choices.begin(), choices.end(), c) == choices.end()) choices.push_back(c);
  }
  rng.Shuffle(choices);
  item.choices = choices;
  item.answer = AnswerLetter(IndexOf(choices, answer));
  item.rationale = Rationale(item.question, answer);
  item.source_id = "toy";
  return item;
}

std::optional<std::string> ToyWorld::Solve(const std::string& question) const {
  if (spec_.family == TaskFamily::kMix) {
    const auto keys = KeysIn(question);
    if (keys.size() < 2) return std::nullopt;
    return values_[MixIndex(keys[0], keys[1])];
  }
  if (spec_.family == TaskFamily::kKeyValue) {
    for (const auto& w : Words_(question)) {
      const std::size_t k = IndexOf(keys_, w);
      if (k < keys_.size()) return values_[value_of_key_[k]];
    }
    return std::nullopt;
  }
  const auto body = PatternBody(question);
  const std::size_t p = SmallestPeriod(body);
  if (p == 0) return std::nullopt;
  return body[body.size() - p];
}

std::string ToyWorld::Rationale(const std::string& question, const std::string& answer) const {
  if (spec_.family == TaskFamily::kMix) {
    const auto keys = KeysIn(question);
    if (keys.size() < 2) return "mixing gives " + answer + " .";
    return "the " + keys_[keys[0]] + " is " + values_[value_of_key_[keys[0]]] + " and the " +
           keys_[keys[1]] + " is " + values_[value_of_key_[keys[1]]] + " , so mixing gives " +
           answer + " .";
  }
  if (spec_.family == TaskFamily::kKeyValue) {
    std::string key = "it";
    for (const auto& w : Words_(question)) {
      if (IndexOf(keys_, w) < keys_.size()) key = w;
    }
    return "the " + key + " is " + answer + " , so the answer is " + answer + " .";
  }
  const auto body = PatternBody(question);
  const std::size_t p = std::max<std::size_t>(SmallestPeriod(body), 1);
  std::string cycle;
  for (std::size_t i = 0; i < p && i < body.size(); ++i) cycle += body[i] + " ";
  return "the sequence repeats " + cycle + ", so the next is " + answer + " .";
}

std::vector<std::size_t> ToyWorld::KeysIn(const std::string& question) const {
  std::vector<std::size_t> out;
  for (const auto& w : Words_(question)) {
    const std::size_t k = IndexOf(keys_, w);
    if (k < keys_.size()) out.push_back(k);
  }
  return out;
}

std::size_t ToyWorld::MixIndex(std::size_t a, std::size_t b) const {
  return (value_of_key_[a] + value_of_key_[b]) % values_.size();
}

ToyTaskData MakeToyTask(const ToyTaskSpec& spec) {
  const ToyWorld world(spec);
  const std::string prefix = spec.family == TaskFamily::kKeyValue ? "kv"
                             : spec.family == TaskFamily::kMix     ? "mix"
                                                                   : "pat";
  auto make = [&](const char* split, std::size_t n, std::uint64_t stream) {
    Rng rng = Rng(spec.seed).Split(stream);
    std::vector<SyntheticRecord> items;
    for (std::size_t i = 0; i < n; ++i) {
      char id[64];
      std::snprintf(id, sizeof(id), "%s-%s-%05zu", prefix.c_str(), split, i);
      items.push_back(world.MakeItem(rng, id));
    }
    return items;
  };
  ToyTaskData data;
  data.train = make("train", spec.train_size, 1);
  data.val = make("val", spec.val_size, 2);
  data.test = make("test", spec.test_size, 3);
  data.public_corpus = make("public", spec.public_size, 4);
  return data;
}

void WriteToyTask(const ToyTaskData& data, const std::filesystem::path& dir) {
  auto rows = [](const std::vector<SyntheticRecord>& items) {
    std::vector<nlohmann::json> out;
    for (const auto& it : items) {
      out.push_back({{"id", it.id},
                     {"question", it.question},
                     {"choices", it.choices},
                     {"answer", it.answer},
                     {"rationale", it.rationale}});
    }
    return out;
  };
  WriteJsonLines(dir / "train.jsonl", rows(data.train));
  WriteJsonLines(dir / "val.jsonl", rows(data.val));
  WriteJsonLines(dir / "test.jsonl", rows(data.test));
  WriteJsonLines(dir / "public.jsonl", rows(data.public_corpus));
}

std::vector<QARecord> AsQARecords(const std::vector<SyntheticRecord>& items) {
  std::vector<QARecord> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back({it.id, it.question, it.choices, it.answer});
  return out;
}

}  // namespace ppcf::eval
