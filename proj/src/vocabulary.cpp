#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "medtext/embeddings.hpp"
#include "medtext/error.hpp"

namespace medtext::embeddings {

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

std::int32_t Vocabulary::add(const std::string& token, std::uint64_t count) {
  if (index_.count(token)) throw InputError("duplicate vocabulary token: " + token);
  auto id = static_cast<std::int32_t>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(token);
  counts_.push_back(count);
  return id;
}

std::int32_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

std::vector<std::int32_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Vocabulary build_vocab(const TokenSequences& sentences, std::uint64_t min_count) {
  std::map<std::string, std::uint64_t> freq;
  for (const auto& s : sentences)
    for (const auto& t : s) ++freq[t];
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, n] : freq)
    if (n >= min_count && tok != kPadToken && tok != kUnkToken) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [tok, n] : kept) v.add(tok, n);
  return v;
}

IdSequences encode_known(const TokenSequences& sentences, const Vocabulary& vocab) {
  IdSequences out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<std::int32_t> ids;
    for (const auto& t : s) {
      auto id = vocab.id(t);
      if (id > kUnkId) ids.push_back(id);
    }
    out.push_back(std::move(ids));
  }
  return out;
}

UnigramSampler::UnigramSampler(std::span<const std::uint64_t> counts, double power) {
  cumulative_.reserve(counts.size());
  for (auto c : counts) {
    total_ += c == 0 ? 0.0 : std::pow(static_cast<double>(c), power);
    cumulative_.push_back(total_);
  }
}

std::int32_t UnigramSampler::sample(Rng& rng) const {
  const double u = rng.uniform() * total_;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<std::int32_t>(it - cumulative_.begin());
}

double UnigramSampler::probability(std::int32_t id) const {
  auto i = static_cast<std::size_t>(id);
  double lo = i == 0 ? 0.0 : cumulative_[i - 1];
  return (cumulative_[i] - lo) / total_;
}

void Word2vecConfig::validate() const {
  require(dim >= 1 && window >= 1 && negatives >= 1 && epochs >= 1 && min_count >= 1,
          "word2vec config: dim, window, negatives, epochs and min_count must be positive");
  require(learning_rate > 0.0, "word2vec config: learning_rate must be positive");
}

void Doc2vecConfig::validate() const {
  require(dim >= 1 && window >= 1 && negatives >= 1 && epochs >= 1 && infer_epochs >= 1,
          "doc2vec config: dim, window, negatives, epochs and infer_epochs must be positive");
  require(learning_rate > 0.0, "doc2vec config: learning_rate must be positive");
}

template <class T>
T sgns_loss_grad(std::span<const T> h, const std::vector<std::span<const T>>& outputs,
                 std::span<T> grad_h, const std::vector<std::span<T>>& grad_outputs) {
  std::fill(grad_h.begin(), grad_h.end(), T(0));
  T loss = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& u = outputs[i];
    T dot = 0;
    for (std::size_t k = 0; k < h.size(); ++k) dot += u[k] * h[k];
    const T label = i == 0 ? T(1) : T(0);
    const T sig = T(1) / (T(1) + std::exp(-dot));
    // -log sigmoid(x) = softplus(-x)
    const T z = i == 0 ? -dot : dot;
    loss += std::max(z, T(0)) + std::log1p(std::exp(-std::abs(z)));
    const T g = sig - label;
    auto gu = grad_outputs[i];
    for (std::size_t k = 0; k < h.size(); ++k) {
      grad_h[k] += g * u[k];
      gu[k] = g * h[k];
    }
  }
  return loss;
}

template float sgns_loss_grad<float>(std::span<const float>, const std::vector<std::span<const float>>&,
                                     std::span<float>, const std::vector<std::span<float>>&);
template double sgns_loss_grad<double>(std::span<const double>, const std::vector<std::span<const double>>&,
                                       std::span<double>, const std::vector<std::span<double>>&);

double decayed_rate(double lr0, std::uint64_t done, std::uint64_t total) {
  if (total == 0) return lr0;
  double progress = std::min(1.0, static_cast<double>(done) / static_cast<double>(total));
  return lr0 * (1.0 - 0.9 * progress);
}

void write_vector_table(std::ostream& out, const std::vector<std::string>& keys, const Matrix<float>& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << keys[r];
    for (float v : m.row(r)) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

std::pair<std::vector<std::string>, Matrix<float>> read_vector_table(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": missing header line");
  std::istringstream header(line);
  long long rows = -1, cols = -1;
  if (!(header >> rows >> cols) || rows < 0 || cols < 1)
    throw InputError(source + ": malformed header '" + line + "' (expected 'V d')");
  std::vector<std::string> keys;
  Matrix<float> m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!std::getline(in, line))
      throw InputError(source + ": expected " + std::to_string(rows) + " rows, file ends after " +
                       std::to_string(r));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const char* p = line.data();
    const char* end = p + line.size();
    const char* key_end = std::find(p, end, ' ');
    keys.emplace_back(p, key_end);
    p = key_end;
    std::size_t c = 0;
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      if (c == m.cols())
        throw InputError(source + ": row " + std::to_string(r) + " ('" + keys.back() +
                         "') has more than " + std::to_string(cols) + " values");
      float v;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc() || !std::isfinite(v))
        throw InputError(source + ": row " + std::to_string(r) + " ('" + keys.back() +
                         "') has a malformed value");
      m(r, c++) = v;
      p = res.ptr;
    }
    if (c != m.cols())
      throw InputError(source + ": row " + std::to_string(r) + " ('" + keys.back() + "') has " +
                       std::to_string(c) + " values, header says " + std::to_string(cols));
  }
  return {std::move(keys), std::move(m)};
}

void save_embeddings(const WordEmbeddings& e, const Vocabulary& vocab, const std::filesystem::path& path) {
  require(e.size() == vocab.size(), "embedding rows do not match vocabulary size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write embeddings: " + path.string());
  write_vector_table(out, vocab.tokens(), e.matrix);
  if (!out) throw InputError("failed writing embeddings: " + path.string());
}

std::pair<WordEmbeddings, Vocabulary> load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embeddings: " + path.string());
  auto [keys, m] = read_vector_table(in, path.string());
  if (keys.size() < 2 || keys[0] != kPadToken || keys[1] != kUnkToken)
    throw InputError(path.string() + ": first two rows must be <PAD> and <UNK>");
  Vocabulary vocab;
  for (std::size_t i = 2; i < keys.size(); ++i) vocab.add(keys[i]);
  return {WordEmbeddings{std::move(m)}, std::move(vocab)};
}

}  // namespace medtext::embeddings
