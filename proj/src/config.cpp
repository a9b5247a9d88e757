#include "selfpaced/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "selfpaced/metrics.hpp"

namespace selfpaced {

namespace {

struct Value {
  enum class Kind { string, number, boolean, array };
  Kind kind = Kind::string;
  std::string text;  // string contents or the number token
  bool flag = false;
  std::vector<Value> items;
};

class ValueParser {
 public:
  explicit ValueParser(std::string_view s) : s_(s) {}

  Value parse_all() {
    Value v = parse();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  Value parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return {Value::Kind::boolean, "", true, {}};
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return {Value::Kind::boolean, "", false, {}};
    }
    return parse_number();
  }

  Value parse_string() {
    Value v;
    ++pos_;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case '"': v.text += '"'; break;
          case '\\': v.text += '\\'; break;
          case 'n': v.text += '\n'; break;
          case 't': v.text += '\t'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        v.text += c;
      }
    }
    return v;
  }

  Value parse_array() {
    Value v;
    v.kind = Value::Kind::array;
    ++pos_;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.items.push_back(parse());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      fail("expected ',' or ']' in array");
    }
  }

  Value parse_number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
    Value v;
    v.kind = Value::Kind::number;
    v.text = std::string(s_.substr(start, pos_ - start));
    double d = 0.0;
    const char* first = v.text.data();
    if (!v.text.empty() && v.text[0] == '+') ++first;
    const auto res = std::from_chars(first, v.text.data() + v.text.size(), d);
    if (v.text.empty() || res.ec != std::errc() || res.ptr != v.text.data() + v.text.size())
      fail("cannot parse value '" + v.text + "'");
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

double as_double(const Value& v, const std::string& name) {
  if (v.kind != Value::Kind::number) throw ConfigError(name + " expects a number");
  const char* first = v.text.data();
  if (v.text[0] == '+') ++first;
  double d = 0.0;
  std::from_chars(first, v.text.data() + v.text.size(), d);
  if (!std::isfinite(d)) throw ConfigError(name + " must be finite");
  return d;
}

std::uint64_t as_u64(const Value& v, const std::string& name) {
  if (v.kind != Value::Kind::number) throw ConfigError(name + " expects a non-negative integer");
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (res.ec == std::errc() && res.ptr == v.text.data() + v.text.size()) return out;
  const double d = as_double(v, name);
  if (d < 0.0 || d != std::floor(d) || d > 9.007199254740992e15)
    throw ConfigError(name + " expects a non-negative integer, got '" + v.text + "'");
  return static_cast<std::uint64_t>(d);
}

bool as_bool(const Value& v, const std::string& name) {
  if (v.kind != Value::Kind::boolean) throw ConfigError(name + " expects true or false");
  return v.flag;
}

const std::string& as_string(const Value& v, const std::string& name) {
  if (v.kind != Value::Kind::string) throw ConfigError(name + " expects a quoted string");
  return v.text;
}

const std::vector<Value>& as_array(const Value& v, const std::string& name) {
  if (v.kind != Value::Kind::array) throw ConfigError(name + " expects an array");
  return v.items;
}

struct Field {
  ConfigField info;
  bool is_string = false;
  std::function<void(TrainConfig&, const Value&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <class Acc>
Field size_field(std::string sec, std::string key, std::string help, Acc acc) {
  return {{std::move(sec), std::move(key), std::move(help)},
          false,
          [acc](TrainConfig& c, const Value& v, const std::string& n) { acc(c) = as_u64(v, n); },
          [acc](const TrainConfig& c) { return std::to_string(acc(const_cast<TrainConfig&>(c))); }};
}

template <class Acc>
Field double_field(std::string sec, std::string key, std::string help, Acc acc) {
  return {{std::move(sec), std::move(key), std::move(help)},
          false,
          [acc](TrainConfig& c, const Value& v, const std::string& n) { acc(c) = as_double(v, n); },
          [acc](const TrainConfig& c) { return format_double(acc(const_cast<TrainConfig&>(c))); }};
}

template <class Acc>
Field bool_field(std::string sec, std::string key, std::string help, Acc acc) {
  return {{std::move(sec), std::move(key), std::move(help)},
          false,
          [acc](TrainConfig& c, const Value& v, const std::string& n) { acc(c) = as_bool(v, n); },
          [acc](const TrainConfig& c) { return std::string(acc(const_cast<TrainConfig&>(c)) ? "true" : "false"); }};
}

template <class Acc>
Field string_field(std::string sec, std::string key, std::string help, Acc acc) {
  return {{std::move(sec), std::move(key), std::move(help)},
          true,
          [acc](TrainConfig& c, const Value& v, const std::string& n) { acc(c) = as_string(v, n); },
          [acc](const TrainConfig& c) { return quote(acc(const_cast<TrainConfig&>(c))); }};
}

template <class Acc>
Field size_list_field(std::string sec, std::string key, std::string help, Acc acc) {
  return {{std::move(sec), std::move(key), std::move(help)},
          false,
          [acc](TrainConfig& c, const Value& v, const std::string& n) {
            std::vector<std::size_t> out;
            for (const auto& item : as_array(v, n)) out.push_back(as_u64(item, n));
            acc(c) = std::move(out);
          },
          [acc](const TrainConfig& c) {
            std::string out = "[";
            const auto& xs = acc(const_cast<TrainConfig&>(c));
            for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + std::to_string(xs[i]);
            return out + "]";
          }};
}

template <class E, class Acc>
Field enum_field(std::string sec, std::string key, std::string help, Acc acc,
                 std::vector<std::pair<std::string, E>> names) {
  std::string choices;
  for (const auto& [name, _] : names) choices += (choices.empty() ? "" : " | ") + name;
  help += " (" + choices + ")";
  return {{std::move(sec), std::move(key), std::move(help)},
          true,
          [acc, names, choices](TrainConfig& c, const Value& v, const std::string& n) {
            const auto& s = as_string(v, n);
            for (const auto& [name, value] : names) {
              if (name == s) {
                acc(c) = value;
                return;
              }
            }
            throw ConfigError(n + ": unknown value '" + s + "', expected " + choices);
          },
          [acc, names](const TrainConfig& c) {
            const E value = acc(const_cast<TrainConfig&>(c));
            for (const auto& [name, e] : names)
              if (e == value) return quote(name);
            return quote("?");
          }};
}

SamplerKind sampler_or_throw(const std::string& s, const std::string& n) {
  const auto kind = parse_sampler(s);
  if (!kind) throw ConfigError(n + ": unknown sampler '" + s + "', expected random | spl | spld | spl-advise");
  return *kind;
}

#define ACC(expr) [](TrainConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    const std::vector<std::pair<std::string, VarianceMode>> variance{{"variance", VarianceMode::variance},
                                                                     {"literal", VarianceMode::literal}};
    const std::vector<std::pair<std::string, DenominatorScope>> scope{{"batch", DenominatorScope::batch},
                                                                      {"index", DenominatorScope::index}};
    const std::vector<std::pair<std::string, SeedMode>> seed_mode{{"loss", SeedMode::loss},
                                                                  {"uniform", SeedMode::uniform}};
    const std::vector<std::pair<std::string, PaceUpdate>> update{{"growth", PaceUpdate::growth},
                                                                 {"as_written", PaceUpdate::as_written}};
    std::vector<Field> f;
    f.push_back(string_field("dataset", "kind", "blobs | idx | csv", ACC(dataset.kind)));
    f.push_back(size_field("dataset", "classes", "blobs: number of classes", ACC(dataset.blobs.classes)));
    f.push_back(size_field("dataset", "subclusters_per_class", "blobs: Gaussian modes per class",
                           ACC(dataset.blobs.subclusters_per_class)));
    f.push_back(size_field("dataset", "samples_per_subcluster", "blobs: samples per mode",
                           ACC(dataset.blobs.samples_per_subcluster)));
    f.push_back(size_field("dataset", "dim", "blobs: feature dimension", ACC(dataset.blobs.dim)));
    f.push_back(double_field("dataset", "center_spread", "blobs: side of the hypercube holding the mode centres",
                             ACC(dataset.blobs.center_spread)));
    f.push_back(double_field("dataset", "cluster_std", "blobs: per-axis standard deviation of each mode",
                             ACC(dataset.blobs.cluster_std)));
    f.push_back(string_field("dataset", "images_path", "idx: image file", ACC(dataset.images_path)));
    f.push_back(string_field("dataset", "labels_path", "idx: label file", ACC(dataset.labels_path)));
    f.push_back(string_field("dataset", "csv_path", "csv: data file with a header row", ACC(dataset.csv_path)));
    f.push_back(string_field("dataset", "label_column", "csv: name of the label column", ACC(dataset.label_column)));
    f.push_back(double_field("dataset", "test_fraction", "held-out fraction", ACC(dataset.test_fraction)));
    f.push_back(bool_field("dataset", "standardize", "z-score features with train statistics", ACC(dataset.standardize)));
    f.push_back(bool_field("dataset", "hflip", "random horizontal flips of image batches", ACC(dataset.hflip)));

    f.push_back(size_field("cluster", "k", "clusters per class", ACC(cluster.k)));
    f.push_back(size_field("cluster", "max_iters", "Lloyd iteration cap", ACC(cluster.max_iters)));
    f.push_back(double_field("cluster", "tol", "Lloyd relative objective tolerance", ACC(cluster.tol)));

    f.push_back(size_list_field("embedding", "hidden", "hidden layer widths", ACC(embedding.hidden)));
    f.push_back(size_field("embedding", "dim", "embedding dimension", ACC(embedding.dim)));
    f.push_back(size_field("embedding", "iterations", "magnet training steps", ACC(embedding.iterations)));
    f.push_back(size_field("embedding", "refresh_interval", "steps between re-clusterings",
                           ACC(embedding.refresh_interval)));
    f.push_back(size_field("embedding", "warmup_iterations", "steps before the first student iteration",
                           ACC(embedding.warmup_iterations)));
    f.push_back(size_field("embedding", "clusters_per_batch", "M, clusters per magnet batch",
                           ACC(embedding.clusters_per_batch)));
    f.push_back(size_field("embedding", "samples_per_cluster", "B, samples per cluster",
                           ACC(embedding.samples_per_cluster)));
    f.push_back(double_field("embedding", "alpha", "magnet margin", ACC(embedding.alpha)));
    f.push_back(enum_field("embedding", "variance_mode", "exponent scale", ACC(embedding.variance_mode), variance));
    f.push_back(enum_field("embedding", "scope", "imposter means", ACC(embedding.scope), scope));
    f.push_back(enum_field("embedding", "seed_mode", "seed cluster draw", ACC(embedding.seed_mode), seed_mode));
    f.push_back(double_field("embedding", "learning_rate", "Adam step size", ACC(embedding.adam.learning_rate)));
    f.push_back(double_field("embedding", "beta1", "Adam first-moment decay", ACC(embedding.adam.beta1)));
    f.push_back(double_field("embedding", "beta2", "Adam second-moment decay", ACC(embedding.adam.beta2)));
    f.push_back(double_field("embedding", "epsilon", "Adam denominator offset", ACC(embedding.adam.epsilon)));
    f.push_back(double_field("embedding", "weight_decay", "L2 weight decay", ACC(embedding.adam.weight_decay)));

    f.push_back(size_list_field("student", "hidden", "hidden layer widths", ACC(student.hidden)));
    f.push_back(size_field("student", "outer_iterations", "self-paced outer iterations",
                           ACC(student.outer_iterations)));
    f.push_back(size_field("student", "epochs_per_iteration", "epochs over the selected pool per outer iteration",
                           ACC(student.epochs_per_iteration)));
    f.push_back(size_field("student", "batch_size", "mini-batch size", ACC(student.batch_size)));
    f.push_back(double_field("student", "learning_rate", "SGD step size", ACC(student.sgd.learning_rate)));
    f.push_back(double_field("student", "momentum", "SGD momentum", ACC(student.sgd.momentum)));
    f.push_back(bool_field("student", "nesterov", "Nesterov momentum", ACC(student.sgd.nesterov)));
    f.push_back(double_field("student", "weight_decay", "L2 weight decay", ACC(student.sgd.weight_decay)));
    f.push_back(size_list_field("student", "lr_milestones", "outer iterations after which the step size drops",
                                ACC(student.lr_milestones)));
    f.push_back(double_field("student", "lr_drop", "step size factor at each milestone", ACC(student.lr_drop)));

    f.push_back(double_field("pace", "beta1", "lambda growth", ACC(pace.beta1)));
    f.push_back(double_field("pace", "beta2", "gamma growth", ACC(pace.beta2)));
    f.push_back(double_field("pace", "init_percentile", "initial lambda as a percentile of the first losses",
                             ACC(pace.init_percentile)));
    f.push_back(double_field("pace", "gamma_ratio", "initial gamma / lambda (spl uses 0)", ACC(pace.gamma_ratio)));
    f.push_back(enum_field("pace", "update_mode", "pace update rule", ACC(pace.update_mode), update));

    f.push_back({{"sampler", "name", "random | spl | spld | spl-advise"},
                 true,
                 [](TrainConfig& c, const Value& v, const std::string& n) {
                   c.sampler = sampler_or_throw(as_string(v, n), n);
                 },
                 [](const TrainConfig& c) { return quote(std::string(to_string(c.sampler))); }});

    f.push_back(size_field("experiment", "seed", "root seed", ACC(seed)));
    f.push_back(size_field("experiment", "runs", "seeds per sampler", ACC(runs)));
    f.push_back(bool_field("experiment", "parallel", "embedding on its own thread", ACC(parallel)));
    f.push_back({{"experiment", "compare", "samplers run by compare"},
                 false,
                 [](TrainConfig& c, const Value& v, const std::string& n) {
                   std::vector<SamplerKind> out;
                   for (const auto& item : as_array(v, n)) out.push_back(sampler_or_throw(as_string(item, n), n));
                   c.compare_samplers = std::move(out);
                 },
                 [](const TrainConfig& c) {
                   std::string out = "[";
                   for (std::size_t i = 0; i < c.compare_samplers.size(); ++i)
                     out += (i ? ", " : "") + quote(std::string(to_string(c.compare_samplers[i])));
                   return out + "]";
                 }});
    return f;
  }();
  return all;
}

#undef ACC

const Field& find_field(const std::string& section, const std::string& key, const std::string& where) {
  bool section_known = false;
  for (const auto& f : fields()) {
    if (f.info.section == section) {
      section_known = true;
      if (f.info.key == key) return f;
    }
  }
  if (!section_known) throw ConfigError(where + "unknown section '" + section + "'");
  throw ConfigError(where + "unknown key '" + section + "." + key + "'");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string && c == '\\') {
      ++i;
      continue;
    }
    if (c == '"') in_string = !in_string;
    if (c == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> out = [] {
    std::vector<ConfigField> v;
    for (const auto& f : fields()) v.push_back(f.info);
    return v;
  }();
  return out;
}

TrainConfig parse_config(std::string_view text, std::string_view source) {
  TrainConfig config;
  std::string section;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      bool known = false;
      for (const auto& f : fields()) known = known || f.info.section == section;
      if (!known) throw ConfigError(where + "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (section.empty()) throw ConfigError(where + "key '" + key + "' outside of a section");
    const Field& field = find_field(section, key, where);
    const std::string name = section + "." + key;
    if (!seen.insert(name).second) throw ConfigError(where + "duplicate key '" + name + "'");
    try {
      field.set(config, ValueParser(trim(std::string_view(line).substr(eq + 1))).parse_all(), name);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void apply_override(TrainConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' lacks '='");
  const std::string name = trim(assignment.substr(0, eq));
  const std::string text = trim(assignment.substr(eq + 1));
  const auto dot = name.find('.');
  if (dot == std::string::npos) throw ConfigError("override key '" + name + "' must be section.key");
  const Field& field = find_field(name.substr(0, dot), name.substr(dot + 1), "override: ");
  Value value;
  if (field.is_string && (text.empty() || text.front() != '"')) {
    value.text = text;
  } else {
    try {
      value = ValueParser(text).parse_all();
    } catch (const ConfigError& e) {
      throw ConfigError("override " + name + ": " + e.what());
    }
  }
  field.set(config, value, name);
}

std::string to_toml(const TrainConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.info.section != section) {
      if (!section.empty()) out += "\n";
      section = f.info.section;
      out += "[" + section + "]\n";
    }
    out += f.info.key + " = " + f.get(config) + "\n";
  }
  return out;
}

std::string config_reference() {
  const TrainConfig defaults;
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.info.section != section) {
      section = f.info.section;
      out += "  [" + section + "]\n";
    }
    std::string line = "    " + f.info.key + " = " + f.get(defaults);
    if (line.size() < 42) line.resize(42, ' ');
    out += line + "  " + f.info.help + "\n";
  }
  return out;
}

}  // namespace selfpaced
