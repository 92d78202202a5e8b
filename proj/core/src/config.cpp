// Copyright 2026 The CAMS Authors. All Rights Reserved.
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

#include "cams/config.hpp"

#include <set>

#include "cams/errors.hpp"
#include "cams/random.hpp"
#include "json.hpp"

namespace cams {

using nlohmann::json;

namespace {

// Reads known keys from an object, rejecting anything unrecognised so typos
// in config files surface as ParseError.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(path_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ParseError(path_ + ": unknown key '" + key + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ParseError(path_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json lora_json(const LoRAConfig& l) {
  return {{"rank", l.rank}, {"dropout", l.dropout}, {"scale", l.scale}};
}

json model_json(const ModelConfig& m) {
  const auto& b = m.branch;
  return {
      {"n_attrs", m.n_attrs},
      {"n_objs", m.n_objs},
      {"prompt_prefix", m.prompt_prefix},
      {"image",
       {{"grid_side", m.image.grid_side},
        {"patch_dim", m.image.patch_dim},
        {"d_v", m.image.d_v},
        {"d_t", m.image.d_t},
        {"lower_layers", m.image.lower_layers},
        {"upper_layers", m.image.upper_layers},
        {"heads", m.image.heads},
        {"lora", lora_json(m.image.lora)}}},
      {"text",
       {{"layers", m.text.layers},
        {"heads", m.text.heads},
        {"max_length", m.text.max_length}}},
      {"gca",
       {{"heads", m.gca.heads},
        {"latent_units", m.gca.latent_units},
        {"ffn_mult", m.gca.ffn_mult},
        {"gate_enabled", m.gca.gate_enabled},
        {"latent_init_std", m.gca.latent_init_std}}},
      {"msd",
       {{"heads", m.msd.heads}, {"layers", m.msd.layers}, {"ffn_mult", m.msd.ffn_mult}}},
      {"branch",
       {{"alpha_attribute", b.alpha_attribute},
        {"alpha_object", b.alpha_object},
        {"alpha_composition", b.alpha_composition},
        {"alpha_global", b.alpha_global},
        {"tau_init", b.tau_init},
        {"beta", b.beta},
        {"attribute_dropout", b.attribute_dropout},
        {"branches",
         {{"global", b.branches.global},
          {"composition", b.branches.composition},
          {"attribute", b.branches.attribute},
          {"object", b.branches.object}}}}},
  };
}

void read_model(const json& j, ModelConfig& m) {
  Reader r(j, "model");
  r.get("n_attrs", m.n_attrs);
  r.get("n_objs", m.n_objs);
  r.get("prompt_prefix", m.prompt_prefix);
  if (const json* c = r.child("image")) {
    Reader ri(*c, r.path("image"));
    ri.get("grid_side", m.image.grid_side);
    ri.get("patch_dim", m.image.patch_dim);
    ri.get("d_v", m.image.d_v);
    ri.get("d_t", m.image.d_t);
    ri.get("lower_layers", m.image.lower_layers);
    ri.get("upper_layers", m.image.upper_layers);
    ri.get("heads", m.image.heads);
    if (const json* l = ri.child("lora")) {
      Reader rl(*l, ri.path("lora"));
      rl.get("rank", m.image.lora.rank);
      rl.get("dropout", m.image.lora.dropout);
      rl.get("scale", m.image.lora.scale);
    }
  }
  if (const json* c = r.child("text")) {
    Reader rt(*c, r.path("text"));
    rt.get("layers", m.text.layers);
    rt.get("heads", m.text.heads);
    rt.get("max_length", m.text.max_length);
  }
  if (const json* c = r.child("gca")) {
    Reader rg(*c, r.path("gca"));
    rg.get("heads", m.gca.heads);
    rg.get("latent_units", m.gca.latent_units);
    rg.get("ffn_mult", m.gca.ffn_mult);
    rg.get("gate_enabled", m.gca.gate_enabled);
    rg.get("latent_init_std", m.gca.latent_init_std);
  }
  if (const json* c = r.child("msd")) {
    Reader rm(*c, r.path("msd"));
    rm.get("heads", m.msd.heads);
    rm.get("layers", m.msd.layers);
    rm.get("ffn_mult", m.msd.ffn_mult);
  }
  if (const json* c = r.child("branch")) {
    auto& b = m.branch;
    Reader rb(*c, r.path("branch"));
    rb.get("alpha_attribute", b.alpha_attribute);
    rb.get("alpha_object", b.alpha_object);
    rb.get("alpha_composition", b.alpha_composition);
    rb.get("alpha_global", b.alpha_global);
    rb.get("tau_init", b.tau_init);
    rb.get("beta", b.beta);
    rb.get("attribute_dropout", b.attribute_dropout);
    if (const json* f = rb.child("branches")) {
      Reader rf(*f, rb.path("branches"));
      rf.get("global", b.branches.global);
      rf.get("composition", b.branches.composition);
      rf.get("attribute", b.branches.attribute);
      rf.get("object", b.branches.object);
    }
  }
}

json config_json(const ExperimentConfig& c) {
  const auto& d = c.data;
  return {
      {"seed", c.seed},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"lr", c.lr},
      {"weight_decay", c.weight_decay},
      {"scheduler", {{"period", c.scheduler.period}, {"factor", c.scheduler.factor}}},
      {"data",
       {{"n_attrs", d.n_attrs},
        {"n_objs", d.n_objs},
        {"seen_fraction", d.seen_fraction},
        {"train_per_seen", d.train_per_seen},
        {"test_per_seen", d.test_per_seen},
        {"test_per_unseen", d.test_per_unseen},
        {"grid_side", d.grid_side},
        {"patch_dim", d.patch_dim},
        {"noise_sigma", d.noise_sigma},
        {"clutter_fraction", d.clutter_fraction}}},
      {"model", model_json(c.model)},
  };
}

}  // namespace

void ExperimentConfig::normalize() {
  model.n_attrs = data.n_attrs;
  model.n_objs = data.n_objs;
  model.image.grid_side = data.grid_side;
  model.image.patch_dim = data.patch_dim;
  model.normalize();
}

void ExperimentConfig::validate() const {
  data.validate();
  model.validate();
  if (model.n_attrs != data.n_attrs || model.n_objs != data.n_objs ||
      model.image.grid_side != data.grid_side ||
      model.image.patch_dim != data.patch_dim) {
    throw ConfigError("model and dataset shapes disagree; call normalize()");
  }
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (lr < 0) throw ConfigError("learning rate must be >= 0");
  if (weight_decay < 0) throw ConfigError("weight decay must be >= 0");
  if (scheduler.factor <= 0) throw ConfigError("scheduler factor must be > 0");
}

std::string ExperimentConfig::to_json(int indent) const {
  return config_json(*this).dump(indent);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ExperimentConfig c = default_config();
  {
    Reader r(j, "config");
    r.get("seed", c.seed);
    r.get("batch_size", c.batch_size);
    r.get("epochs", c.epochs);
    r.get("lr", c.lr);
    r.get("weight_decay", c.weight_decay);
    if (const json* s = r.child("scheduler")) {
      Reader rs(*s, "config.scheduler");
      rs.get("period", c.scheduler.period);
      rs.get("factor", c.scheduler.factor);
    }
    if (const json* d = r.child("data")) {
      Reader rd(*d, "config.data");
      rd.get("n_attrs", c.data.n_attrs);
      rd.get("n_objs", c.data.n_objs);
      rd.get("seen_fraction", c.data.seen_fraction);
      rd.get("train_per_seen", c.data.train_per_seen);
      rd.get("test_per_seen", c.data.test_per_seen);
      rd.get("test_per_unseen", c.data.test_per_unseen);
      rd.get("grid_side", c.data.grid_side);
      rd.get("patch_dim", c.data.patch_dim);
      rd.get("noise_sigma", c.data.noise_sigma);
      rd.get("clutter_fraction", c.data.clutter_fraction);
    }
    if (const json* m = r.child("model")) read_model(*m, c.model);
  }
  c.normalize();
  return c;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(config_json(*this).dump()); }

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.normalize();
  return c;
}

ExperimentConfig preset_config(std::string_view name) {
  ExperimentConfig c = default_config();
  c.batch_size = 64;
  c.epochs = 15;
  c.weight_decay = 1e-5;
  c.model.gca.latent_units = 32;
  c.model.image.lora.dropout = 0.1;
  c.model.msd.layers = 1;
  c.model.branch.alpha_attribute = 0.5;
  c.model.branch.alpha_object = 0.5;
  c.model.branch.alpha_composition = 1.0;
  c.model.branch.alpha_global = 1.0;
  c.model.branch.attribute_dropout = 0.3;
  if (name == "mit-states") {
    c.lr = 1e-4;
    c.model.image.upper_layers = 8;
    c.model.branch.beta = 0.85;
    c.model.image.lora.rank = 128;
  } else if (name == "ut-zappos") {
    c.lr = 2.5e-4;
    c.model.image.upper_layers = 9;
    c.model.branch.beta = 0.65;
    c.model.image.lora.rank = 64;
  } else if (name == "cgqa") {
    c.lr = 1e-4;
    c.model.image.upper_layers = 12;
    c.model.branch.beta = 0.85;
    c.model.image.lora.rank = 128;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (expected mit-states, ut-zappos or cgqa)");
  }
  // The stub width must admit the adapter rank.
  c.model.image.d_v = std::max<std::size_t>(c.model.image.d_v, c.model.image.lora.rank);
  c.normalize();
  return c;
}

BranchFlags parse_branches(std::string_view spec) {
  BranchFlags f{false, false, false, false};
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t next = std::min(spec.find('+', pos), spec.size());
    const std::string_view part = spec.substr(pos, next - pos);
    bool* slot = part == "g"   ? &f.global
                 : part == "c" ? &f.composition
                 : part == "a" ? &f.attribute
                 : part == "o" ? &f.object
                               : nullptr;
    if (!slot) {
      throw ConfigError("unknown branch '" + std::string(part) + "' in '" +
                        std::string(spec) + "' (use g, c, a, o joined by '+')");
    }
    if (*slot) throw ConfigError("branch '" + std::string(part) + "' listed twice");
    *slot = true;
    pos = next + 1;
  }
  f.validate();
  return f;
}

std::string branches_name(const BranchFlags& f) {
  std::string out;
  auto add = [&](bool on, const char* letter) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += letter;
  };
  add(f.global, "g");
  add(f.composition, "c");
  add(f.attribute, "a");
  add(f.object, "o");
  return out;
}

}  // namespace cams
