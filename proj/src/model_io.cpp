#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "medtext/error.hpp"
#include "medtext/models.hpp"

namespace medtext::models {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'C', 'F'};

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <class U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take(std::uint64_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw InputError(source_ + ": truncated model file");
  }

  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

template <class N>
N parse_num(const std::string& key, const std::string& s) {
  N v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw InputError("model config: value of '" + key + "' is not a number: '" + s + "'");
  return v;
}

}  // namespace

void ModelFile::set(const std::string& key, const std::string& value) {
  require(key.find('=') == std::string::npos && key.find('\n') == std::string::npos,
          "model config: invalid key '" + key + "'");
  require(value.find('\n') == std::string::npos, "model config: value of '" + key + "' contains a newline");
  for (auto& [k, v] : config)
    if (k == key) {
      v = value;
      return;
    }
  config.emplace_back(key, value);
}

const std::string& ModelFile::get(const std::string& key) const {
  for (const auto& [k, v] : config)
    if (k == key) return v;
  throw InputError("model file lacks config key '" + key + "'");
}

bool ModelFile::has(const std::string& key) const {
  for (const auto& kv : config)
    if (kv.first == key) return true;
  return false;
}

void ModelFile::add_tensor(const std::string& name, Tensor<float> t) {
  require(!has_tensor(name), "model file: duplicate tensor '" + name + "'");
  tensors.emplace_back(name, std::move(t));
}

const Tensor<float>& ModelFile::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw InputError("model file lacks tensor '" + name + "'");
}

bool ModelFile::has_tensor(const std::string& name) const {
  for (const auto& nt : tensors)
    if (nt.first == name) return true;
  return false;
}

std::string encode_model_file(const ModelFile& f) {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kFormatVersion);
  std::string block;
  for (const auto& [k, v] : f.config) block += k + "=" + v + "\n";
  put_le<std::uint64_t>(out, block.size());
  out += block;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.tensors.size()));
  for (const auto& [name, t] : f.tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape) put_le<std::uint64_t>(out, d);
    for (float v : t.data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ModelFile decode_model_file(std::string_view bytes, const std::string& source) {
  Reader r(bytes, source);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw InputError(source + ": not a model file (bad magic)");
  r.take(4);
  const auto version = r.le<std::uint32_t>();
  if (version != kFormatVersion)
    throw InputError(source + ": unsupported model format version " + std::to_string(version) + " (expected " +
                     std::to_string(kFormatVersion) + ")");
  ModelFile f;
  const auto block_len = r.le<std::uint64_t>();
  std::string block(r.take(block_len));
  std::istringstream lines(block);
  std::string line;
  while (std::getline(lines, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(source + ": malformed config line '" + line + "'");
    f.config.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.take(r.le<std::uint32_t>()));
    const auto rank = r.le<std::uint32_t>();
    std::vector<std::size_t> shape;
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.le<std::uint64_t>();
      if (d != 0 && n > (bytes.size() / 4) / d) throw InputError(source + ": tensor '" + name + "' is larger than the file");
      n *= d;
      shape.push_back(static_cast<std::size_t>(d));
    }
    if (n > bytes.size() / 4) throw InputError(source + ": truncated model file");
    Tensor<float> t(shape);
    for (auto& v : t.data) v = std::bit_cast<float>(r.le<std::uint32_t>());
    f.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw InputError(source + ": trailing bytes after the last tensor");
  return f;
}

void write_model_file(const ModelFile& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file: " + path.string());
  auto bytes = encode_model_file(f);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing model file: " + path.string());
}

ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model_file(bytes, path.string());
}

std::vector<std::pair<std::string, std::string>> describe(const CnnConfig& c) {
  return {
      {"cnn.max_len", std::to_string(c.max_len)},
      {"cnn.embed_dim", std::to_string(c.embed_dim)},
      {"cnn.conv_pairs", std::to_string(c.conv_pairs)},
      {"cnn.filters", std::to_string(c.filters)},
      {"cnn.kernel", std::to_string(c.kernel)},
      {"cnn.pool", std::to_string(c.pool)},
      {"cnn.dropout_p", fmt(c.dropout_p)},
      {"cnn.fc_dim", std::to_string(c.fc_dim)},
      {"cnn.n_classes", std::to_string(c.n_classes)},
      {"cnn.epochs", std::to_string(c.epochs)},
      {"cnn.batch_size", std::to_string(c.batch_size)},
      {"cnn.optimizer", c.optimizer.kind == neural::OptimizerKind::adam ? "adam" : "sgd_momentum"},
      {"cnn.learning_rate", fmt(c.optimizer.learning_rate)},
      {"cnn.momentum", fmt(c.optimizer.momentum)},
      {"cnn.beta1", fmt(c.optimizer.beta1)},
      {"cnn.beta2", fmt(c.optimizer.beta2)},
      {"cnn.epsilon", fmt(c.optimizer.epsilon)},
      {"cnn.seed", std::to_string(c.seed)},
  };
}

CnnConfig cnn_config_from(const ModelFile& f) {
  CnnConfig c;
  auto sz = [&](const char* k) { return parse_num<std::size_t>(k, f.get(k)); };
  auto dbl = [&](const char* k) { return parse_num<double>(k, f.get(k)); };
  c.max_len = sz("cnn.max_len");
  c.embed_dim = sz("cnn.embed_dim");
  c.conv_pairs = sz("cnn.conv_pairs");
  c.filters = sz("cnn.filters");
  c.kernel = sz("cnn.kernel");
  c.pool = sz("cnn.pool");
  c.dropout_p = dbl("cnn.dropout_p");
  c.fc_dim = sz("cnn.fc_dim");
  c.n_classes = sz("cnn.n_classes");
  c.epochs = sz("cnn.epochs");
  c.batch_size = sz("cnn.batch_size");
  const auto& opt = f.get("cnn.optimizer");
  if (opt == "adam") c.optimizer.kind = neural::OptimizerKind::adam;
  else if (opt == "sgd_momentum") c.optimizer.kind = neural::OptimizerKind::sgd_momentum;
  else throw InputError("model config: unknown optimizer '" + opt + "'");
  c.optimizer.learning_rate = dbl("cnn.learning_rate");
  c.optimizer.momentum = dbl("cnn.momentum");
  c.optimizer.beta1 = dbl("cnn.beta1");
  c.optimizer.beta2 = dbl("cnn.beta2");
  c.optimizer.epsilon = dbl("cnn.epsilon");
  c.seed = parse_num<std::uint64_t>("cnn.seed", f.get("cnn.seed"));
  return c;
}

std::vector<std::pair<std::string, std::string>> describe(const LogRConfig& c) {
  return {
      {"logr.n_features", std::to_string(c.n_features)},
      {"logr.n_classes", std::to_string(c.n_classes)},
      {"logr.l2_lambda", fmt(c.l2_lambda)},
      {"logr.learning_rate", fmt(c.learning_rate)},
      {"logr.epochs", std::to_string(c.epochs)},
      {"logr.batch_size", std::to_string(c.batch_size)},
      {"logr.seed", std::to_string(c.seed)},
  };
}

void append_cnn(ModelFile& f, const CnnModel<float>& m) {
  f.set("kind", "cnn");
  for (auto& [k, v] : describe(m.config)) f.set(k, v);
  auto names = CnnModel<float>::parameter_names(m.config);
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) f.add_tensor(names[i], *params[i]);
}

CnnModel<float> extract_cnn(const ModelFile& f) {
  auto m = CnnModel<float>::zeros(cnn_config_from(f));
  auto names = CnnModel<float>::parameter_names(m.config);
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = f.tensor(names[i]);
    if (t.shape != params[i]->shape) throw InputError("model file: tensor '" + names[i] + "' has the wrong shape");
    *params[i] = t;
  }
  return m;
}

void append_logreg(ModelFile& f, const LogRModel& m) {
  f.set("kind", "logr");
  for (auto& [k, v] : describe(m.config)) f.set(k, v);
  f.add_tensor("logr.weights", m.weights);
  f.add_tensor("logr.bias", m.bias);
}

LogRModel extract_logreg(const ModelFile& f) {
  LogRModel m;
  auto sz = [&](const char* k) { return parse_num<std::size_t>(k, f.get(k)); };
  m.config.n_features = sz("logr.n_features");
  m.config.n_classes = sz("logr.n_classes");
  m.config.l2_lambda = parse_num<double>("logr.l2_lambda", f.get("logr.l2_lambda"));
  m.config.learning_rate = parse_num<double>("logr.learning_rate", f.get("logr.learning_rate"));
  m.config.epochs = sz("logr.epochs");
  m.config.batch_size = sz("logr.batch_size");
  m.config.seed = parse_num<std::uint64_t>("logr.seed", f.get("logr.seed"));
  m.weights = f.tensor("logr.weights");
  m.bias = f.tensor("logr.bias");
  if (m.weights.shape != std::vector<std::size_t>{m.config.n_classes, m.config.n_features} ||
      m.bias.shape != std::vector<std::size_t>{m.config.n_classes})
    throw InputError("model file: logistic regression tensors do not match the config");
  return m;
}

void save_model(const CnnModel<float>& m, const std::filesystem::path& path) {
  ModelFile f;
  append_cnn(f, m);
  write_model_file(f, path);
}

void save_model(const LogRModel& m, const std::filesystem::path& path) {
  ModelFile f;
  append_logreg(f, m);
  write_model_file(f, path);
}

CnnModel<float> load_cnn(const std::filesystem::path& path) { return extract_cnn(read_model_file(path)); }

LogRModel load_logreg(const std::filesystem::path& path) { return extract_logreg(read_model_file(path)); }

}  // namespace medtext::models
