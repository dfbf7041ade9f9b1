#include "guard/scripted_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "guard/errors.hpp"
#include "guard/text.hpp"

namespace guard {

namespace {

std::vector<double> parse_prob_row(const std::vector<std::string>& fields, size_t first,
                                   size_t vocab_size, int line_no) {
  if (fields.size() - first != vocab_size)
    throw ParseError("distribution row has " + std::to_string(fields.size() - first) +
                         " entries, vocabulary has " + std::to_string(vocab_size),
                     line_no);
  std::vector<double> probs;
  probs.reserve(vocab_size);
  double sum = 0.0;
  for (size_t i = first; i < fields.size(); ++i) {
    size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(fields[i], &pos);
    } catch (const std::exception&) {
      throw ParseError("bad probability '" + fields[i] + "'", line_no);
    }
    if (pos != fields[i].size()) throw ParseError("bad probability '" + fields[i] + "'", line_no);
    if (v < 0.0)
      throw ValidationError("negative probability at line " + std::to_string(line_no));
    probs.push_back(v);
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ValidationError("distribution row sums to " + format_sig9(sum) +
                          ", expected 1 (line " + std::to_string(line_no) + ")");
  return probs;
}

}  // namespace

std::shared_ptr<ScriptedBackend> ScriptedBackend::parse(const std::string& text) {
  auto backend = std::shared_ptr<ScriptedBackend>(new ScriptedBackend());
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    if (line.rfind("vocab:", 0) == 0) {
      if (!backend->vocab_.empty()) throw ParseError("duplicate vocab header", line_no);
      backend->vocab_ = split_quoted(line.substr(6), line_no);
      if (backend->vocab_.empty()) throw ParseError("empty vocabulary", line_no);
      for (size_t i = 0; i < backend->vocab_.size(); ++i) {
        if (backend->vocab_[i].empty())
          throw ParseError("vocab token " + std::to_string(i + 1) + " is empty", line_no);
        for (size_t j = i + 1; j < backend->vocab_.size(); ++j) {
          if (backend->vocab_[i] == backend->vocab_[j])
            throw ParseError("duplicate vocab token '" + escape(backend->vocab_[i]) + "'",
                             line_no);
        }
        if (backend->vocab_[i] == "EOS") backend->eos_id_ = static_cast<int>(i);
      }
      continue;
    }

    auto fields = split_quoted(line, line_no);
    if (fields.empty()) continue;

    if (fields[0] == "match") {
      if (backend->vocab_.empty()) throw ParseError("rule before vocab header", line_no);
      if (fields.size() < 3 || fields[2] != "->")
        throw ParseError("expected: match \"<suffix>\" -> p1 .. pn", line_no);
      if (fields[1].empty()) throw ParseError("empty match suffix", line_no);
      ScriptRule rule;
      rule.suffix = fields[1];
      rule.dist.probs = parse_prob_row(fields, 3, backend->vocab_.size(), line_no);
      rule.line = line_no;
      backend->rules_.push_back(std::move(rule));
      continue;
    }

    if (fields[0] == "default") {
      if (backend->vocab_.empty()) throw ParseError("rule before vocab header", line_no);
      if (fields.size() < 2 || fields[1] != "->")
        throw ParseError("expected: default -> p1 .. pn", line_no);
      if (backend->default_dist_) throw ParseError("duplicate default row", line_no);
      TokenDistribution d;
      d.probs = parse_prob_row(fields, 2, backend->vocab_.size(), line_no);
      backend->default_dist_ = std::move(d);
      continue;
    }

    throw ParseError("unrecognized directive '" + fields[0] + "'", line_no);
  }
  if (backend->vocab_.empty()) throw ParseError("script has no vocab header");
  return backend;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scripted model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const TokenDistribution& ScriptedBackend::distribution_for(const std::string& decoded) const {
  const ScriptRule* best = nullptr;
  for (const auto& rule : rules_) {
    if (!decoded.ends_with(rule.suffix)) continue;
    if (!best || rule.suffix.size() > best->suffix.size()) best = &rule;
  }
  if (best) return best->dist;
  if (default_dist_) return *default_dist_;
  throw DomainError("no matching rule and no default distribution for prefix tail '" +
                    escape(decoded.substr(decoded.size() > 24 ? decoded.size() - 24 : 0)) + "'");
}

int sample_from_distribution(const TokenDistribution& dist, const DecodePolicy& policy,
                             uint64_t salt) {
  validate_distribution(dist);
  const auto& p = dist.probs;
  if (policy.temperature < 0.0) throw DomainError("temperature must be non-negative");
  if (!(policy.top_p > 0.0 && policy.top_p <= 1.0)) throw DomainError("top_p must lie in (0,1]");

  if (policy.temperature == 0.0) {
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  std::vector<double> w(p.size());
  for (size_t i = 0; i < p.size(); ++i)
    w[i] = p[i] > 0.0 ? std::pow(p[i], 1.0 / policy.temperature) : 0.0;
  std::vector<size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return w[a] > w[b]; });

  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double kept = 0.0;
  size_t cut = 0;
  while (cut < order.size()) {
    kept += w[order[cut]];
    ++cut;
    if (kept / total >= policy.top_p) break;
  }

  std::mt19937_64 rng(salt);
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * kept;
  double acc = 0.0;
  for (size_t i = 0; i < cut; ++i) {
    acc += w[order[i]];
    if (u < acc) return static_cast<int>(order[i]);
  }
  return static_cast<int>(order[cut - 1]);
}

GenerationStep ScriptedBackend::step(const Prefix& prefix, const DecodePolicy& policy) {
  const std::string decoded = prefix.text();
  const TokenDistribution& dist = distribution_for(decoded);
  const uint64_t salt = mix64(policy.seed, fnv1a64(decoded));
  const int idx = sample_from_distribution(dist, policy, salt);

  GenerationStep out;
  out.token = Token{idx, vocab_[static_cast<size_t>(idx)]};
  out.distribution = dist;
  out.entropy_nats = shannon_entropy(dist);
  out.entropy_estimated = false;
  out.is_eos = (idx == eos_id_);
  return out;
}

SpanResult ScriptedBackend::generate_span(const Prefix& prefix, const std::string& injected_text,
                                          int horizon, const DecodePolicy& policy) {
  if (horizon < 1) throw DomainError("span horizon must be >= 1");
  Prefix work = prefix;
  work.generated += injected_text;  // force-fed: unscored, outside the horizon

  SpanResult span;
  for (int i = 0; i < horizon; ++i) {
    GenerationStep s = step(work, policy);
    if (s.is_eos) {
      span.stopped_early = true;
      break;
    }
    span.tokens.push_back(s.token);
    span.entropies.push_back(s.entropy_nats);
    span.text += s.token.text;
    work.generated += s.token.text;
  }
  return span;
}

BackendCapabilities ScriptedBackend::capabilities() const {
  BackendCapabilities caps;
  caps.has_full_distribution = true;
  caps.max_topk = static_cast<int>(vocab_.size());
  caps.supports_prefix_reuse = true;
  caps.supports_batched_spans = true;
  return caps;
}

}  // namespace guard
