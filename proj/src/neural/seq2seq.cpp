#include <algorithm>
#include <cmath>
#include <limits>

#include "tcause/binary_io.hpp"
#include "tcause/error.hpp"
#include "tcause/neural.hpp"

namespace tcause {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using CMap = Eigen::Map<const MatrixXd>;
using MMap = Eigen::Map<MatrixXd>;

namespace {

constexpr char kMagic[4] = {'T', 'S', '2', 'S'};
constexpr std::uint32_t kVersion = 1;

VectorXd sigmoid(const VectorXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

// PAD and BOS are never emitted; their logits are pinned to -inf so the
// output distribution covers decodable tokens only.
void mask_logits(VectorXd& logits) {
  logits(Vocab::kPad) = -std::numeric_limits<double>::infinity();
  logits(Vocab::kBos) = -std::numeric_limits<double>::infinity();
}

double log_sum_exp(const VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

struct GruCache {
  VectorXd x, h, z, r, n, rh;
};

VectorXd gru_forward(const CMap& W, const CMap& U, const CMap& b, const VectorXd& x, const VectorXd& h,
                     GruCache* cache) {
  const auto H = h.size();
  const VectorXd aw = W * x + b.col(0);
  const VectorXd uh = U.topRows(2 * H) * h;
  const VectorXd z = sigmoid(aw.head(H) + uh.head(H));
  const VectorXd r = sigmoid(aw.segment(H, H) + uh.tail(H));
  const VectorXd rh = r.cwiseProduct(h);
  const VectorXd n = (aw.tail(H) + U.bottomRows(H) * rh).array().tanh().matrix();
  VectorXd out = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h);
  if (cache) *cache = {x, h, z, r, n, rh};
  return out;
}

// Accumulates parameter gradients; returns dx and adds into dh.
VectorXd gru_backward(const CMap& W, const CMap& U, const GruCache& c, const VectorXd& dout, MMap& dW, MMap& dU,
                      MMap& db, VectorXd& dh) {
  const auto H = c.h.size();
  const VectorXd dn = dout.cwiseProduct((1.0 - c.z.array()).matrix());
  const VectorXd dz = dout.cwiseProduct(c.h - c.n);
  dh += dout.cwiseProduct(c.z);
  VectorXd da(3 * H);
  da.tail(H) = dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
  da.head(H) = dz.cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));
  const VectorXd drh = U.bottomRows(H).transpose() * da.tail(H);
  const VectorXd dr = drh.cwiseProduct(c.h);
  dh += drh.cwiseProduct(c.r);
  da.segment(H, H) = dr.cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));

  dW.noalias() += da * c.x.transpose();
  dU.topRows(2 * H).noalias() += da.head(2 * H) * c.h.transpose();
  dU.bottomRows(H).noalias() += da.tail(H) * c.rh.transpose();
  db.col(0) += da;
  dh.noalias() += U.topRows(2 * H).transpose() * da.head(2 * H);
  return W.transpose() * da;
}

}  // namespace

Seq2SeqModel::Seq2SeqModel(Vocab vocab, std::size_t embed, std::size_t hidden, bool use_relation,
                           ReasonDirection direction)
    : vocab_(std::move(vocab)), embed_(embed), hidden_(hidden), use_relation_(use_relation), direction_(direction) {
  if (embed_ == 0 || hidden_ == 0) fail(ErrorCode::InvalidParams, "model sizes must be positive");
  layout();
}

void Seq2SeqModel::layout() {
  const std::size_t V = vocab_.size(), E = embed_, H = hidden_;
  const std::size_t R = use_relation_ ? vocab_.relation_count() : 1;
  blocks_.clear();
  std::size_t off = 0;
  const auto add = [&](const char* name, std::size_t rows, std::size_t cols) {
    blocks_.push_back({name, off, rows, cols});
    off += rows * cols;
  };
  add("emb", V, E);
  add("enc_W", 3 * H, E);
  add("enc_U", 3 * H, H);
  add("enc_b", 3 * H, 1);
  add("dec_W", 3 * H, E + H);
  add("dec_U", 3 * H, H);
  add("dec_b", 3 * H, 1);
  add("att_Wh", H, H);
  add("att_Ws", H, H);
  add("att_b", H, R);
  add("att_v", H, R);
  add("out_W", V, 2 * H);
  add("out_b", V, 1);
  theta_.assign(off, 0.0);
}

const Seq2SeqModel::Block& Seq2SeqModel::block(const std::string& name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  fail(ErrorCode::InvalidParams, "no parameter block '" + name + "'");
}

Eigen::Map<MatrixXd> Seq2SeqModel::view(const std::string& name) {
  const auto& b = block(name);
  return {theta_.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
}

Eigen::Map<const MatrixXd> Seq2SeqModel::view(const std::string& name) const {
  const auto& b = block(name);
  return {theta_.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
}

void Seq2SeqModel::init_random(Rng& rng, double scale) {
  for (auto& t : theta_) t = rng.uniform(-scale, scale);
}

void Seq2SeqModel::init_embeddings(const WordVectors& vectors, Rng& rng) {
  auto emb = view("emb");
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    const auto it = vectors.find(vocab_.token(static_cast<int>(i)));
    if (it != vectors.end()) {
      if (it->second.size() != embed_) {
        fail(ErrorCode::InvalidInput, "word vector dimension does not match the embedding size");
      }
      for (std::size_t j = 0; j < embed_; ++j) emb(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second[j];
    } else {
      for (std::size_t j = 0; j < embed_; ++j) {
        emb(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.uniform(-0.05, 0.05);
      }
    }
  }
}

int Seq2SeqModel::attention_slot(int relation) const {
  if (relation < 0 || static_cast<std::size_t>(relation) >= vocab_.relation_count()) {
    fail(ErrorCode::UnknownRelation, "relation id " + std::to_string(relation) + " out of range");
  }
  return use_relation_ ? relation : 0;
}

namespace {

void check_tokens(const std::vector<int>& ids, std::size_t V, const char* what) {
  for (int t : ids) {
    if (t < 0 || static_cast<std::size_t>(t) >= V) fail(ErrorCode::InvalidInput, std::string(what) + " token id out of range");
  }
}

}  // namespace

Seq2SeqModel::Encoded Seq2SeqModel::encode(const std::vector<int>& src) const {
  if (src.empty()) fail(ErrorCode::InvalidInput, "empty source sequence");
  check_tokens(src, vocab_.size(), "source");
  const auto emb = view("emb");
  const auto W = view("enc_W"), U = view("enc_U"), b = view("enc_b");
  const auto H = static_cast<Eigen::Index>(hidden_);
  Encoded e;
  e.states.resize(H, static_cast<Eigen::Index>(src.size()));
  VectorXd h = VectorXd::Zero(H);
  for (std::size_t j = 0; j < src.size(); ++j) {
    h = gru_forward(W, U, b, emb.row(src[j]).transpose(), h, nullptr);
    e.states.col(static_cast<Eigen::Index>(j)) = h;
  }
  e.proj = view("att_Wh") * e.states;
  return e;
}

Seq2SeqModel::AttentionResult Seq2SeqModel::attention(const Encoded& enc, const VectorXd& s_prev, int relation) const {
  const int slot = attention_slot(relation);
  const VectorXd q = view("att_Ws") * s_prev + view("att_b").col(slot);
  const auto v = view("att_v").col(slot);
  const MatrixXd u = (enc.proj.colwise() + q).array().tanh().matrix();
  const VectorXd logits = u.transpose() * v;
  AttentionResult out;
  out.weights = (logits.array() - log_sum_exp(logits)).exp().matrix();
  out.context = enc.states * out.weights;
  return out;
}

VectorXd Seq2SeqModel::step(const Encoded& enc, int relation, const VectorXd& s_prev, int prev_token,
                            VectorXd& log_probs) const {
  const auto E = static_cast<Eigen::Index>(embed_), H = static_cast<Eigen::Index>(hidden_);
  const auto att = attention(enc, s_prev, relation);
  VectorXd x(E + H);
  x.head(E) = view("emb").row(prev_token).transpose();
  x.tail(H) = att.context;
  VectorXd s = gru_forward(view("dec_W"), view("dec_U"), view("dec_b"), x, s_prev, nullptr);
  VectorXd o(2 * H);
  o.head(H) = s;
  o.tail(H) = att.context;
  VectorXd logits = view("out_W") * o + view("out_b").col(0);
  mask_logits(logits);
  log_probs = logits.array() - log_sum_exp(logits);
  return s;
}

namespace {

void check_targets(const std::vector<int>& dst, std::size_t V) {
  check_tokens(dst, V, "target");
  for (int t : dst) {
    if (t == Vocab::kPad || t == Vocab::kBos) fail(ErrorCode::InvalidInput, "PAD/BOS cannot be a target token");
  }
}

}  // namespace

double Seq2SeqModel::loss(const Example& ex) const {
  check_targets(ex.dst, vocab_.size());
  const auto enc = encode(ex.src);
  VectorXd s = initial_state(enc), lp;
  int prev = Vocab::kBos;
  double total = 0;
  for (std::size_t i = 0; i <= ex.dst.size(); ++i) {
    const int y = i < ex.dst.size() ? ex.dst[i] : Vocab::kEos;
    s = step(enc, ex.relation, s, prev, lp);
    total -= lp(y);
    prev = y;
  }
  return total;
}

double Seq2SeqModel::loss_and_grad(const Example& ex, std::span<double> grad) const {
  if (grad.size() != theta_.size()) fail(ErrorCode::InvalidParams, "gradient buffer size mismatch");
  check_targets(ex.dst, vocab_.size());
  const int slot = attention_slot(ex.relation);
  const auto E = static_cast<Eigen::Index>(embed_), H = static_cast<Eigen::Index>(hidden_);
  const auto J = static_cast<Eigen::Index>(ex.src.size());
  if (J == 0) fail(ErrorCode::InvalidInput, "empty source sequence");
  check_tokens(ex.src, vocab_.size(), "source");

  const auto emb = view("emb");
  const auto eW = view("enc_W"), eU = view("enc_U"), eb = view("enc_b");
  const auto dW = view("dec_W"), dU = view("dec_U"), db = view("dec_b");
  const auto Wh = view("att_Wh"), Ws = view("att_Ws"), Ab = view("att_b"), Av = view("att_v");
  const auto Wo = view("out_W"), bo = view("out_b");

  const auto gmap = [&](const std::string& name) {
    const auto& b = block(name);
    return MMap(grad.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
  };
  auto g_emb = gmap("emb");
  auto g_eW = gmap("enc_W"), g_eU = gmap("enc_U"), g_eb = gmap("enc_b");
  auto g_dW = gmap("dec_W"), g_dU = gmap("dec_U"), g_db = gmap("dec_b");
  auto g_Wh = gmap("att_Wh"), g_Ws = gmap("att_Ws"), g_Ab = gmap("att_b"), g_Av = gmap("att_v");
  auto g_Wo = gmap("out_W"), g_bo = gmap("out_b");

  // encoder
  std::vector<GruCache> enc_cache(static_cast<std::size_t>(J));
  MatrixXd hs(H, J);
  VectorXd h = VectorXd::Zero(H);
  for (Eigen::Index j = 0; j < J; ++j) {
    h = gru_forward(eW, eU, eb, emb.row(ex.src[static_cast<std::size_t>(j)]).transpose(), h,
                    &enc_cache[static_cast<std::size_t>(j)]);
    hs.col(j) = h;
  }
  const MatrixXd P = Wh * hs;

  // decoder
  struct StepCache {
    VectorXd s_prev, a, c, o, p;
    MatrixXd u;
    GruCache gru;
    int prev, y;
  };
  const std::size_t L = ex.dst.size() + 1;
  std::vector<StepCache> steps(L);
  VectorXd s = hs.col(J - 1);
  int prev = Vocab::kBos;
  double total = 0;
  for (std::size_t i = 0; i < L; ++i) {
    auto& st = steps[i];
    st.prev = prev;
    st.y = i < ex.dst.size() ? ex.dst[i] : Vocab::kEos;
    st.s_prev = s;
    const VectorXd q = Ws * s + Ab.col(slot);
    st.u = (P.colwise() + q).array().tanh().matrix();
    const VectorXd e = st.u.transpose() * Av.col(slot);
    st.a = (e.array() - log_sum_exp(e)).exp().matrix();
    st.c = hs * st.a;
    VectorXd x(E + H);
    x.head(E) = emb.row(prev).transpose();
    x.tail(H) = st.c;
    s = gru_forward(dW, dU, db, x, s, &st.gru);
    st.o.resize(2 * H);
    st.o.head(H) = s;
    st.o.tail(H) = st.c;
    VectorXd logits = Wo * st.o + bo.col(0);
    mask_logits(logits);
    const double lse = log_sum_exp(logits);
    st.p = (logits.array() - lse).exp().matrix();
    total -= logits(st.y) - lse;
    prev = st.y;
  }

  // backward through the decoder
  MatrixXd dhs = MatrixXd::Zero(H, J);
  MatrixXd dP = MatrixXd::Zero(H, J);
  VectorXd ds = VectorXd::Zero(H);
  for (std::size_t ii = L; ii-- > 0;) {
    const auto& st = steps[ii];
    VectorXd dlogits = st.p;
    dlogits(st.y) -= 1.0;
    g_Wo.noalias() += dlogits * st.o.transpose();
    g_bo.col(0) += dlogits;
    const VectorXd d_o = Wo.transpose() * dlogits;
    ds += d_o.head(H);
    VectorXd dc = d_o.tail(H);

    VectorXd ds_prev = VectorXd::Zero(H);
    const VectorXd dx = gru_backward(dW, dU, st.gru, ds, g_dW, g_dU, g_db, ds_prev);
    g_emb.row(st.prev) += dx.head(E).transpose();
    dc += dx.tail(H);

    // c = hs a
    dhs.noalias() += dc * st.a.transpose();
    const VectorXd da = hs.transpose() * dc;
    const VectorXd de = st.a.cwiseProduct((da.array() - st.a.dot(da)).matrix());
    g_Av.col(slot).noalias() += st.u * de;
    const MatrixXd du = Av.col(slot) * de.transpose();
    const MatrixXd dpre = du.cwiseProduct((1.0 - st.u.array().square()).matrix());
    dP += dpre;
    const VectorXd dq = dpre.rowwise().sum();
    g_Ws.noalias() += dq * st.s_prev.transpose();
    g_Ab.col(slot) += dq;
    ds_prev.noalias() += Ws.transpose() * dq;
    ds = ds_prev;
  }
  dhs.col(J - 1) += ds;  // s_0 = h_J
  g_Wh.noalias() += dP * hs.transpose();
  dhs.noalias() += Wh.transpose() * dP;

  // backward through the encoder
  VectorXd carry = VectorXd::Zero(H);
  for (Eigen::Index j = J; j-- > 0;) {
    const VectorXd dout = dhs.col(j) + carry;
    VectorXd dh_prev = VectorXd::Zero(H);
    const VectorXd dx = gru_backward(eW, eU, enc_cache[static_cast<std::size_t>(j)], dout, g_eW, g_eU, g_eb, dh_prev);
    g_emb.row(ex.src[static_cast<std::size_t>(j)]) += dx.transpose();
    carry = dh_prev;
  }
  return total;
}

std::vector<char> Seq2SeqModel::serialize() const {
  ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u64(embed_);
  w.u64(hidden_);
  w.u8(use_relation_ ? 1 : 0);
  w.u8(direction_ == ReasonDirection::forward ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(vocab_.size()));
  for (const auto& t : vocab_.tokens()) w.str(t);
  w.u32(static_cast<std::uint32_t>(vocab_.relation_count()));
  for (const auto& r : vocab_.relations()) w.str(r);
  w.u64(theta_.size());
  for (double t : theta_) w.f64(t);
  w.u64(loss_history.size());
  for (double l : loss_history) w.f64(l);
  return w.bytes();
}

std::uint64_t Seq2SeqModel::digest() const {
  const auto b = serialize();
  Fnv1a h;
  h.update(b.data(), b.size());
  return h.digest();
}

void save_model(const Seq2SeqModel& model, const std::filesystem::path& path) {
  ByteWriter w;
  const auto b = model.serialize();
  w.raw(b.data(), b.size());
  w.save(path);
}

Seq2SeqModel load_model(const std::filesystem::path& path) {
  auto r = ByteReader::open(path);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (!std::equal(magic, magic + 4, kMagic)) fail(ErrorCode::CorruptFile, path.string() + ": not a model file");
  if (r.u32() != kVersion) fail(ErrorCode::CorruptFile, path.string() + ": unsupported model version");
  const auto embed = r.u64(), hidden = r.u64();
  const bool use_rel = r.u8() != 0;
  const auto dir = r.u8() == 0 ? ReasonDirection::forward : ReasonDirection::backward;
  const auto nt = r.u32();
  if (nt < Vocab::kSpecials || nt > r.remaining()) fail(ErrorCode::CorruptFile, "bad vocabulary size");
  std::vector<std::string> toks;
  for (std::uint32_t i = 0; i < nt; ++i) toks.push_back(r.str());
  const Vocab specials;
  if (!std::equal(specials.tokens().begin(), specials.tokens().end(), toks.begin())) {
    fail(ErrorCode::CorruptFile, "vocabulary specials missing");
  }
  toks.erase(toks.begin(), toks.begin() + Vocab::kSpecials);
  const auto nr = r.u32();
  if (nr > r.remaining()) fail(ErrorCode::CorruptFile, "bad relation count");
  std::vector<std::string> rels;
  for (std::uint32_t i = 0; i < nr; ++i) rels.push_back(r.str());
  if (embed == 0 || hidden == 0 || embed > (1u << 20) || hidden > (1u << 20)) {
    fail(ErrorCode::CorruptFile, "bad model sizes");
  }
  Seq2SeqModel m(Vocab::from_tables(std::move(toks), std::move(rels)), embed, hidden, use_rel, dir);
  if (r.u64() != m.theta_.size()) fail(ErrorCode::CorruptFile, "parameter count does not match the shape");
  for (auto& t : m.theta_) t = r.f64();
  const auto nl = r.u64();
  if (nl > r.remaining() / sizeof(double)) fail(ErrorCode::CorruptFile, "bad loss history length");
  m.loss_history.resize(nl);
  for (auto& l : m.loss_history) l = r.f64();
  if (r.remaining() != 0) fail(ErrorCode::CorruptFile, "trailing bytes in model file");
  return m;
}

}  // namespace tcause
