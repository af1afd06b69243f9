// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/io/config.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dafkit/io/atomic_file.hpp"

namespace dafkit {

namespace {

// One parsed value: scalar or flat array of scalars.
struct Value {
  enum class Kind { boolean, integer, real, string, array } kind;
  bool b = false;
  long long i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> items;
};

using Section = std::map<std::string, Value>;
using Doc = std::map<std::string, Section>;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

Value parse_scalar(const std::string& raw, int line_no) {
  const std::string text = trim(raw);
  if (text.empty())
    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                ": empty value");
  Value v;
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"')
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unterminated string");
    v.kind = Value::Kind::string;
    for (size_t i = 1; i + 1 < text.size(); ++i) {
      if (text[i] == '\\' && i + 2 < text.size()) {
        ++i;
        v.s.push_back(text[i]);
      } else {
        v.s.push_back(text[i]);
      }
    }
    return v;
  }
  if (text == "true" || text == "false") {
    v.kind = Value::Kind::boolean;
    v.b = text == "true";
    return v;
  }
  // Integer first, then real.
  {
    long long out = 0;
    const auto [p, ec] =
        std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec == std::errc() && p == text.data() + text.size()) {
      v.kind = Value::Kind::integer;
      v.i = out;
      return v;
    }
  }
  {
    double out = 0.0;
    const auto [p, ec] =
        std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec == std::errc() && p == text.data() + text.size()) {
      v.kind = Value::Kind::real;
      v.d = out;
      return v;
    }
  }
  throw std::invalid_argument("config line " + std::to_string(line_no) +
                              ": cannot parse value '" + text + "'");
}

Value parse_value(const std::string& raw, int line_no) {
  const std::string text = trim(raw);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']')
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unterminated array");
    Value v;
    v.kind = Value::Kind::array;
    const std::string body = text.substr(1, text.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(item).empty()) v.items.push_back(parse_scalar(item, line_no));
        item.clear();
      } else {
        item.push_back(c);
      }
    }
    if (!trim(item).empty()) v.items.push_back(parse_scalar(item, line_no));
    return v;
  }
  return parse_scalar(raw, line_no);
}

Doc parse_toml_doc(const std::string& text) {
  Doc doc;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip comments outside strings.
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line.resize(i);
        break;
      }
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": bad section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": empty section name");
      doc[section];
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key");
    if (section.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": key outside any section");
    if (doc[section].count(key))
      throw std::invalid_argument("config: duplicate key " + section + "." +
                                  key);
    doc[section][key] = parse_value(t.substr(eq + 1), line_no);
  }
  return doc;
}

Doc parse_json_doc(const std::string& text) {
  const nlohmann::json root = nlohmann::json::parse(text);
  if (!root.is_object())
    throw std::invalid_argument("config: JSON root must be an object");
  Doc doc;
  for (const auto& [section, body] : root.items()) {
    if (!body.is_object())
      throw std::invalid_argument("config: section " + section +
                                  " must be an object");
    for (const auto& [key, jv] : body.items()) {
      Value v;
      auto scalar = [&](const nlohmann::json& j) {
        Value out;
        if (j.is_boolean()) {
          out.kind = Value::Kind::boolean;
          out.b = j.get<bool>();
        } else if (j.is_number_integer() || j.is_number_unsigned()) {
          out.kind = Value::Kind::integer;
          out.i = j.get<long long>();
        } else if (j.is_number_float()) {
          out.kind = Value::Kind::real;
          out.d = j.get<double>();
        } else if (j.is_string()) {
          out.kind = Value::Kind::string;
          out.s = j.get<std::string>();
        } else {
          throw std::invalid_argument("config: unsupported JSON value in " +
                                      section + "." + key);
        }
        return out;
      };
      if (jv.is_array()) {
        v.kind = Value::Kind::array;
        for (const auto& item : jv) v.items.push_back(scalar(item));
      } else {
        v = scalar(jv);
      }
      doc[section][key] = std::move(v);
    }
  }
  return doc;
}

// Typed readers. Each consumes its key so that leftovers are reported.
class SectionReader {
 public:
  SectionReader(Doc& doc, std::string name) : name_(std::move(name)) {
    auto it = doc.find(name_);
    if (it != doc.end()) section_ = &it->second;
  }

  void get(const char* key, double& out) {
    if (Value* v = take(key)) {
      if (v->kind == Value::Kind::real) out = v->d;
      else if (v->kind == Value::Kind::integer) out = static_cast<double>(v->i);
      else fail(key, "number");
    }
  }
  void get(const char* key, int& out) {
    if (Value* v = take(key)) {
      if (v->kind != Value::Kind::integer) fail(key, "integer");
      out = static_cast<int>(v->i);
    }
  }
  void get(const char* key, uint64_t& out) {
    if (Value* v = take(key)) {
      if (v->kind != Value::Kind::integer || v->i < 0)
        fail(key, "non-negative integer");
      out = static_cast<uint64_t>(v->i);
    }
  }
  void get(const char* key, bool& out) {
    if (Value* v = take(key)) {
      if (v->kind != Value::Kind::boolean) fail(key, "boolean");
      out = v->b;
    }
  }
  void get(const char* key, std::string& out) {
    if (Value* v = take(key)) {
      if (v->kind != Value::Kind::string) fail(key, "string");
      out = v->s;
    }
  }
  void get(const char* key, std::vector<int>& out) {
    if (Value* v = take(key)) {
      if (v->kind != Value::Kind::array) fail(key, "array of integers");
      out.clear();
      for (const auto& item : v->items) {
        if (item.kind != Value::Kind::integer) fail(key, "array of integers");
        out.push_back(static_cast<int>(item.i));
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (Value* v = take(key)) {
      if (v->kind != Value::Kind::array) fail(key, "array of strings");
      out.clear();
      for (const auto& item : v->items) {
        if (item.kind != Value::Kind::string) fail(key, "array of strings");
        out.push_back(item.s);
      }
    }
  }

  void finish() {
    if (!section_) return;
    for (const auto& [key, value] : *section_)
      if (!consumed_.count(key))
        throw std::invalid_argument("config: unknown key " + name_ + "." +
                                    key);
  }

 private:
  Value* take(const char* key) {
    if (!section_) return nullptr;
    auto it = section_->find(key);
    if (it == section_->end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }
  [[noreturn]] void fail(const char* key, const char* want) {
    throw std::invalid_argument("config: " + name_ + "." + key + " must be " +
                                want);
  }
  std::string name_;
  Section* section_ = nullptr;
  std::set<std::string> consumed_;
};

void read_dataset_section(Doc& doc, const char* name,
                          ConfigDoc::DatasetSection& out,
                          std::string* dataset_name = nullptr) {
  SectionReader r(doc, name);
  if (dataset_name) r.get("name", *dataset_name);
  r.get("classes", out.classes);
  r.get("images_per_class", out.images_per_class);
  r.get("families", out.families);
  r.get("background_palette", out.background_palette);
  r.get("texture_noise", out.texture_noise);
  r.get("color_jitter", out.color_jitter);
  r.get("distractor_prob", out.distractor_prob);
  r.finish();
}

ConfigDoc from_doc(Doc doc) {
  ConfigDoc cfg;

  {
    SectionReader r(doc, "table1");
    r.get("synthetic_probability_alpha", cfg.synthetic_probability_alpha);
    r.get("stacked_augmentations_k", cfg.stacked_augmentations_k);
    r.get("activation_probabilities", cfg.activation_probabilities);
    r.get("synthetic_images_per_real", cfg.synthetic_images_per_real);
    r.get("token_initialization", cfg.token_initialization);
    r.get("textual_inversion_learning_rate",
          cfg.textual_inversion_learning_rate);
    r.get("textual_inversion_batch_size", cfg.textual_inversion_batch_size);
    r.get("textual_inversion_training_steps",
          cfg.textual_inversion_training_steps);
    r.get("real_guidance_strength_t0", cfg.real_guidance_strength_t0);
    r.get("denoising_steps", cfg.denoising_steps);
    r.get("guidance_scale", cfg.guidance_scale);
    r.get("resolution", cfg.resolution);
    r.get("classifier_learning_rate", cfg.classifier_learning_rate);
    r.get("classifier_batch_size", cfg.classifier_batch_size);
    r.get("classifier_training_steps", cfg.classifier_training_steps);
    r.get("classifier_eval_interval", cfg.classifier_eval_interval);
    r.finish();
  }
  {
    SectionReader r(doc, "diffusion");
    r.get("timesteps", cfg.timesteps);
    r.get("beta_start", cfg.beta_start);
    r.get("beta_end", cfg.beta_end);
    r.get("channels", cfg.channels);
    r.get("cond_dim", cfg.cond_dim);
    r.get("sin_dim", cfg.sin_dim);
    r.finish();
  }
  {
    SectionReader r(doc, "backbone_training");
    r.get("learning_rate", cfg.backbone_learning_rate);
    r.get("batch_size", cfg.backbone_batch_size);
    r.get("steps", cfg.backbone_steps);
    r.get("uncond_prob", cfg.backbone_uncond_prob);
    r.finish();
  }
  read_dataset_section(doc, "dataset", cfg.dataset, &cfg.dataset_name);
  read_dataset_section(doc, "pretrain_dataset", cfg.pretrain);
  read_dataset_section(doc, "extractor_dataset", cfg.extractor_dataset);
  {
    SectionReader r(doc, "extractor");
    r.get("channels", cfg.extractor_channels);
    r.get("learning_rate", cfg.extractor_learning_rate);
    r.get("batch_size", cfg.extractor_batch_size);
    r.get("steps", cfg.extractor_steps);
    r.finish();
  }
  {
    SectionReader r(doc, "experiment");
    r.get("q_grid", cfg.q_grid);
    r.get("trials", cfg.trials);
    r.get("methods", cfg.methods);
    r.get("seed", cfg.seed);
    r.get("workers", cfg.workers);
    r.get("flips", cfg.flips);
    r.get("flip_prob", cfg.flip_prob);
    r.get("mask_dilation", cfg.mask_dilation);
    r.get("granularity", cfg.granularity);
    r.finish();
  }
  {
    SectionReader r(doc, "paths");
    r.get("backbone_checkpoint", cfg.backbone_checkpoint);
    r.finish();
  }

  for (const auto& [section, body] : doc) {
    static const std::set<std::string> known = {
        "table1",       "diffusion",         "backbone_training",
        "dataset",      "pretrain_dataset",  "extractor_dataset",
        "extractor",    "experiment",        "paths"};
    if (!known.count(section))
      throw std::invalid_argument("config: unknown section [" + section + "]");
  }

  if (cfg.activation_probabilities != "1/k")
    throw std::invalid_argument(
        "config: activation_probabilities supports only \"1/k\"");
  if (cfg.flips != "h" && cfg.flips != "hv")
    throw std::invalid_argument("config: flips must be \"h\" or \"hv\"");
  if (cfg.granularity != "pooled" && cfg.granularity != "specific")
    throw std::invalid_argument(
        "config: granularity must be \"pooled\" or \"specific\"");
  if (cfg.channels.size() != 3 || cfg.extractor_channels.size() != 3)
    throw std::invalid_argument("config: channels must have 3 entries");
  return cfg;
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(uint64_t v) { return std::to_string(v); }
std::string fmt(const std::string& v) { return "\"" + v + "\""; }

template <typename T>
std::string fmt_array(const std::vector<T>& values) {
  std::string out = "[";
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fmt(values[i]);
  }
  return out + "]";
}

void dump_dataset_section(std::ostringstream& out, const char* name,
                          const ConfigDoc::DatasetSection& d,
                          const std::string* dataset_name = nullptr) {
  out << "[" << name << "]\n";
  if (dataset_name) out << "name = " << fmt(*dataset_name) << "\n";
  out << "classes = " << d.classes << "\n";
  out << "images_per_class = " << d.images_per_class << "\n";
  out << "families = " << fmt_array(d.families) << "\n";
  out << "background_palette = " << d.background_palette << "\n";
  out << "texture_noise = " << fmt(d.texture_noise) << "\n";
  out << "color_jitter = " << fmt(d.color_jitter) << "\n";
  out << "distractor_prob = " << fmt(d.distractor_prob) << "\n\n";
}

}  // namespace

std::string ConfigDoc::dump_toml() const {
  std::ostringstream out;
  out << "[table1]\n";
  out << "synthetic_probability_alpha = " << fmt(synthetic_probability_alpha)
      << "\n";
  out << "stacked_augmentations_k = " << stacked_augmentations_k << "\n";
  out << "activation_probabilities = " << fmt(activation_probabilities)
      << "\n";
  out << "synthetic_images_per_real = " << synthetic_images_per_real << "\n";
  out << "token_initialization = " << fmt(token_initialization) << "\n";
  out << "textual_inversion_learning_rate = "
      << fmt(textual_inversion_learning_rate) << "\n";
  out << "textual_inversion_batch_size = " << textual_inversion_batch_size
      << "\n";
  out << "textual_inversion_training_steps = "
      << textual_inversion_training_steps << "\n";
  out << "real_guidance_strength_t0 = " << fmt(real_guidance_strength_t0)
      << "\n";
  out << "denoising_steps = " << denoising_steps << "\n";
  out << "guidance_scale = " << fmt(guidance_scale) << "\n";
  out << "resolution = " << resolution << "\n";
  out << "classifier_learning_rate = " << fmt(classifier_learning_rate)
      << "\n";
  out << "classifier_batch_size = " << classifier_batch_size << "\n";
  out << "classifier_training_steps = " << classifier_training_steps << "\n";
  out << "classifier_eval_interval = " << classifier_eval_interval << "\n\n";

  out << "[diffusion]\n";
  out << "timesteps = " << timesteps << "\n";
  out << "beta_start = " << fmt(beta_start) << "\n";
  out << "beta_end = " << fmt(beta_end) << "\n";
  out << "channels = " << fmt_array(channels) << "\n";
  out << "cond_dim = " << cond_dim << "\n";
  out << "sin_dim = " << sin_dim << "\n\n";

  out << "[backbone_training]\n";
  out << "learning_rate = " << fmt(backbone_learning_rate) << "\n";
  out << "batch_size = " << backbone_batch_size << "\n";
  out << "steps = " << backbone_steps << "\n";
  out << "uncond_prob = " << fmt(backbone_uncond_prob) << "\n\n";

  dump_dataset_section(out, "dataset", dataset, &dataset_name);
  dump_dataset_section(out, "pretrain_dataset", pretrain);
  dump_dataset_section(out, "extractor_dataset", extractor_dataset);

  out << "[extractor]\n";
  out << "channels = " << fmt_array(extractor_channels) << "\n";
  out << "learning_rate = " << fmt(extractor_learning_rate) << "\n";
  out << "batch_size = " << extractor_batch_size << "\n";
  out << "steps = " << extractor_steps << "\n\n";

  out << "[experiment]\n";
  out << "q_grid = " << fmt_array(q_grid) << "\n";
  out << "trials = " << trials << "\n";
  out << "methods = " << fmt_array(methods) << "\n";
  out << "seed = " << seed << "\n";
  out << "workers = " << workers << "\n";
  out << "flips = " << fmt(flips) << "\n";
  out << "flip_prob = " << fmt(flip_prob) << "\n";
  out << "mask_dilation = " << mask_dilation << "\n";
  out << "granularity = " << fmt(granularity) << "\n\n";

  out << "[paths]\n";
  out << "backbone_checkpoint = " << fmt(backbone_checkpoint) << "\n";
  return out.str();
}

ConfigDoc ConfigDoc::parse_toml(const std::string& text) {
  return from_doc(parse_toml_doc(text));
}

ConfigDoc ConfigDoc::parse_json(const std::string& text) {
  return from_doc(parse_json_doc(text));
}

ConfigDoc ConfigDoc::parse_file(const std::filesystem::path& path) {
  const std::string text = read_file_text(path);
  if (path.extension() == ".json") return parse_json(text);
  return parse_toml(text);
}

ExperimentConfig ConfigDoc::to_experiment_config() const {
  ExperimentConfig e;
  e.dataset_name = dataset_name;

  auto to_spec = [&](const DatasetSection& d) {
    ToyDatasetSpec s;
    s.classes = d.classes;
    s.images_per_class = d.images_per_class;
    s.resolution = resolution;
    for (const auto& f : d.families)
      s.families.push_back(shape_family_from_string(f));
    s.background_palette = d.background_palette;
    s.texture_noise = d.texture_noise;
    s.color_jitter = d.color_jitter;
    s.distractor_prob = d.distractor_prob;
    return s;
  };
  e.data = to_spec(dataset);
  e.pretrain_data = to_spec(pretrain);
  e.extractor_data = to_spec(extractor_dataset);

  e.schedule_T = timesteps;
  e.beta_start = beta_start;
  e.beta_end = beta_end;

  e.net.in_channels = 3;
  e.net.c1 = channels[0];
  e.net.c2 = channels[1];
  e.net.c3 = channels[2];
  e.net.cond_dim = cond_dim;
  e.net.sin_dim = sin_dim;

  e.backbone.lr = backbone_learning_rate;
  e.backbone.batch_size = backbone_batch_size;
  e.backbone.steps = backbone_steps;
  e.backbone.uncond_prob = backbone_uncond_prob;

  e.extractor_net.in_channels = 3;
  e.extractor_net.c1 = extractor_channels[0];
  e.extractor_net.c2 = extractor_channels[1];
  e.extractor_net.c3 = extractor_channels[2];
  e.extractor_train.lr = extractor_learning_rate;
  e.extractor_train.batch_size = extractor_batch_size;
  e.extractor_train.steps = extractor_steps;

  e.inversion.lr = textual_inversion_learning_rate;
  e.inversion.batch_size = textual_inversion_batch_size;
  e.inversion.steps = textual_inversion_training_steps;
  e.inversion.granularity = granularity == "specific"
                                ? ConceptTable::Granularity::per_image
                                : ConceptTable::Granularity::per_class;

  e.sampler.steps = denoising_steps;
  e.sampler.guidance_scale = guidance_scale;

  e.probe.lr = classifier_learning_rate;
  e.probe.batch_size = classifier_batch_size;
  e.probe.steps = classifier_training_steps;
  e.probe.eval_interval = classifier_eval_interval;

  e.alpha = synthetic_probability_alpha;
  e.store_m = synthetic_images_per_real;
  e.mask_dilation = mask_dilation;
  e.vertical_flips = flips == "hv";
  e.flip_prob = flip_prob;

  e.q_grid = q_grid;
  e.trials = trials;
  for (const auto& m : methods) {
    MethodSpec spec = MethodSpec::parse(m);
    if (spec.kind == MethodKind::real_guidance ||
        (spec.needs_inversion() && spec.k == 1))
      spec.t0 = real_guidance_strength_t0;
    e.methods.push_back(spec);
  }
  e.master_seed = seed;
  e.workers = workers;
  return e;
}

}  // namespace dafkit
