#include "tbft/protocol/messages.hpp"

#include <array>

namespace tbft {

namespace {

constexpr std::array<std::string_view, kMsgKindCount> kKindNames = {
    "Request",        "Prepare",        "VoteForCommit", "Commit",  "VoteForDecide",
    "Decide",         "RequestViewChange", "ViewChange", "VoteForNewView", "NewView",
    "FetchProposals", "Proposals",      "Reply"};

template <typename T>
void put_opt_digest(Writer& w, const std::optional<T>& v) {
  w.boolean(v.has_value());
  if (v) w.digest(*v);
}

std::optional<crypto::Digest> get_opt_digest(Reader& r) {
  if (!r.boolean()) return std::nullopt;
  return r.digest();
}

std::size_t body_index_for(MsgKind k) {
  switch (k) {
    case MsgKind::Request: return 0;
    case MsgKind::Prepare:
    case MsgKind::Commit: return 1;
    case MsgKind::VoteForCommit:
    case MsgKind::VoteForDecide:
    case MsgKind::VoteForNewView: return 2;
    case MsgKind::Decide: return 3;
    case MsgKind::RequestViewChange: return 4;
    case MsgKind::ViewChange: return 5;
    case MsgKind::NewView: return 6;
    case MsgKind::FetchProposals: return 7;
    case MsgKind::Proposals: return 8;
    case MsgKind::Reply: return 9;
  }
  throw DecodeError("bad message kind");
}

}  // namespace

std::string_view to_string(MsgKind k) {
  auto i = static_cast<std::size_t>(k);
  return i >= 1 && i <= kKindNames.size() ? kKindNames[i - 1] : "Unknown";
}

std::optional<MsgKind> msg_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<MsgKind>(i + 1);
  }
  return std::nullopt;
}

bool is_view_change_kind(MsgKind k) {
  return k == MsgKind::RequestViewChange || k == MsgKind::ViewChange ||
         k == MsgKind::VoteForNewView || k == MsgKind::NewView;
}

void put(Writer& w, const ClientRequest& r) {
  w.u32(r.client).u64(r.request_id).u8(static_cast<std::uint8_t>(r.op.type)).str(r.op.key);
  w.bytes(r.op.value).u8(static_cast<std::uint8_t>(r.subscription));
}

ClientRequest get_request(Reader& r) {
  ClientRequest req;
  req.client = r.u32();
  req.request_id = r.u64();
  auto t = r.u8();
  if (t < 1 || t > 3) throw DecodeError("bad op type");
  req.op.type = static_cast<OpType>(t);
  req.op.key = r.str();
  req.op.value = r.bytes();
  auto s = r.u8();
  if (s < 1 || s > 3) throw DecodeError("bad subscription");
  req.subscription = static_cast<Subscription>(s);
  return req;
}

void put(Writer& w, const QuorumCert& qc) {
  put(w, qc.counter);
  w.field(qc.secret);
}

QuorumCert get_qc(Reader& r) {
  QuorumCert qc;
  qc.counter = get_counter_value(r);
  qc.secret = r.field();
  return qc;
}

void put(Writer& w, const ProposalBody& b) {
  w.u8(static_cast<std::uint8_t>(b.kind));
  put(w, b.counter);
  w.u32(static_cast<std::uint32_t>(b.batch.size()));
  for (const auto& req : b.batch) put(w, req);
  put_optional(w, b.justify);
  put_opt_digest(w, b.result);
  put_opt_digest(w, b.parent);
  w.digest(b.secret_commitment);
  put_opt_digest(w, b.anchor);
}

ProposalBody get_body(Reader& r) {
  ProposalBody b;
  auto k = r.u8();
  if (k > 1) throw DecodeError("bad proposal kind");
  b.kind = static_cast<ProposalKind>(k);
  b.counter = get_counter_value(r);
  auto count = r.u32();
  if (count > 4096) throw DecodeError("batch too large");
  for (std::uint32_t i = 0; i < count; ++i) b.batch.push_back(get_request(r));
  if (r.boolean()) b.justify = get_qc(r);
  b.result = get_opt_digest(r);
  b.parent = get_opt_digest(r);
  b.secret_commitment = r.digest();
  b.anchor = get_opt_digest(r);
  return b;
}

crypto::Digest ProposalBody::digest() const {
  Writer w;
  w.str("tbft/proposal");
  put(w, *this);
  return crypto::sha256(w.data());
}

void put(Writer& w, const ProposalMsg& p) {
  put(w, p.body);
  put(w, p.leader_sig);
  put(w, p.commitment);
  w.boolean(p.share.has_value());
  if (p.share) w.ciphertext(*p.share);
}

ProposalMsg get_proposal(Reader& r) {
  ProposalMsg p;
  p.body = get_body(r);
  p.leader_sig = get_signed_counter(r);
  p.commitment = get_signed_counter(r);
  if (r.boolean()) p.share = r.ciphertext();
  return p;
}

void put(Writer& w, const ViewTransition& t) {
  put(w, t.anchor);
  put(w, t.commitment);
  put(w, t.qc);
}

ViewTransition get_transition(Reader& r) {
  ViewTransition t;
  t.anchor = get_anchor(r);
  t.commitment = get_signed_counter(r);
  t.qc = get_qc(r);
  return t;
}

crypto::Digest request_digest(const ClientRequest& req) {
  Writer w;
  put(w, req);
  return crypto::sha256(w.data());
}

crypto::Digest batch_digest(const std::vector<ClientRequest>& batch) {
  Writer w;
  w.str("tbft/batch").u32(static_cast<std::uint32_t>(batch.size()));
  for (const auto& r : batch) put(w, r);
  return crypto::sha256(w.data());
}

namespace {

struct BodyWriter {
  Writer& w;
  void operator()(const RequestMsg& m) const { put(w, m.request); }
  void operator()(const ProposalMessage& m) const { put(w, m.proposal); }
  void operator()(const VoteMsg& m) const {
    put(w, m.counter);
    w.share(m.share);
  }
  void operator()(const DecideMsg& m) const { put(w, m.qc); }
  void operator()(const RequestViewChangeMsg& m) const {
    w.u64(m.target);
    put(w, m.proof);
  }
  void operator()(const ViewChangeMsg& m) const {
    put(w, m.anchor);
    put(w, m.proposal);
  }
  void operator()(const NewViewMsg& m) const { put(w, m.transition); }
  void operator()(const FetchMsg& m) const { w.u64(m.view).u64(m.from).u64(m.to); }
  void operator()(const ProposalsMsg& m) const {
    w.u64(m.view).u32(static_cast<std::uint32_t>(m.entries.size()));
    for (const auto& e : m.entries) {
      put(w, e.proposal);
      put_optional(w, e.qc);
    }
    put_optional(w, m.transition);
  }
  void operator()(const ReplyMsg& m) const {
    w.u32(m.client).u64(m.request_id).u8(static_cast<std::uint8_t>(m.kind)).bytes(m.result);
    put(w, m.qc);
    put(w, m.commitment);
    w.u32(m.leader).u64(m.view);
  }
};

}  // namespace

Bytes encode(const Message& m) {
  if (m.body.index() != body_index_for(m.kind)) {
    throw std::invalid_argument("encode: kind does not match body");
  }
  Writer w;
  w.u8(static_cast<std::uint8_t>(m.kind));
  std::visit(BodyWriter{w}, m.body);
  return std::move(w).take();
}

Message decode(ByteView data) {
  Reader r(data);
  Message m;
  auto k = r.u8();
  if (k < 1 || k > kMsgKindCount) throw DecodeError("bad message kind");
  m.kind = static_cast<MsgKind>(k);
  switch (body_index_for(m.kind)) {
    case 0: m.body = RequestMsg{get_request(r)}; break;
    case 1: m.body = ProposalMessage{get_proposal(r)}; break;
    case 2: {
      VoteMsg v;
      v.counter = get_counter_value(r);
      v.share = r.share();
      m.body = v;
      break;
    }
    case 3: m.body = DecideMsg{get_qc(r)}; break;
    case 4: {
      RequestViewChangeMsg v;
      v.target = r.u64();
      v.proof = get_log_proof(r);
      m.body = v;
      break;
    }
    case 5: {
      ViewChangeMsg v;
      v.anchor = get_anchor(r);
      v.proposal = get_proposal(r);
      m.body = v;
      break;
    }
    case 6: m.body = NewViewMsg{get_transition(r)}; break;
    case 7: {
      FetchMsg f;
      f.view = r.u64();
      f.from = r.u64();
      f.to = r.u64();
      m.body = f;
      break;
    }
    case 8: {
      ProposalsMsg p;
      p.view = r.u64();
      auto count = r.u32();
      if (count > 4096) throw DecodeError("too many entries");
      for (std::uint32_t i = 0; i < count; ++i) {
        StoredEntry e;
        e.proposal = get_proposal(r);
        if (r.boolean()) e.qc = get_qc(r);
        p.entries.push_back(std::move(e));
      }
      if (r.boolean()) p.transition = get_transition(r);
      m.body = std::move(p);
      break;
    }
    default: {
      ReplyMsg rep;
      rep.client = r.u32();
      rep.request_id = r.u64();
      auto pk = r.u8();
      if (pk < 1 || pk > 2) throw DecodeError("bad proof kind");
      rep.kind = static_cast<ProofKind>(pk);
      rep.result = r.bytes();
      rep.qc = get_qc(r);
      rep.commitment = get_signed_counter(r);
      rep.leader = r.u32();
      rep.view = r.u64();
      m.body = std::move(rep);
      break;
    }
  }
  r.expect_done();
  return m;
}

std::optional<CounterValue> counter_of(const Message& m) {
  struct V {
    std::optional<CounterValue> operator()(const ProposalMessage& x) const { return x.proposal.body.counter; }
    std::optional<CounterValue> operator()(const VoteMsg& x) const { return x.counter; }
    std::optional<CounterValue> operator()(const DecideMsg& x) const { return x.qc.counter; }
    std::optional<CounterValue> operator()(const RequestViewChangeMsg& x) const { return x.proof.proof_counter; }
    std::optional<CounterValue> operator()(const ViewChangeMsg& x) const { return x.proposal.body.counter; }
    std::optional<CounterValue> operator()(const NewViewMsg& x) const { return x.transition.qc.counter; }
    std::optional<CounterValue> operator()(const ReplyMsg& x) const { return x.qc.counter; }
    std::optional<CounterValue> operator()(const RequestMsg&) const { return std::nullopt; }
    std::optional<CounterValue> operator()(const FetchMsg&) const { return std::nullopt; }
    std::optional<CounterValue> operator()(const ProposalsMsg&) const { return std::nullopt; }
  };
  return std::visit(V{}, m.body);
}

}  // namespace tbft
