#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>

#include "tbft/protocol/messages.hpp"

namespace tbft {

struct ClientConfig {
  std::size_t n = 3;
  std::uint64_t timeout = 80;       // T_c
  std::uint64_t max_timeout = 640;  // backoff cap
  std::size_t window = 1;           // outstanding requests
  Subscription subscription = Subscription::Commitment;
};

class ClientEnv {
 public:
  virtual ~ClientEnv() = default;
  virtual std::uint64_t now() const = 0;
  virtual void send(NodeId from, NodeId to, const Message& msg) = 0;
  virtual void set_timer(NodeId node, std::uint64_t delay, std::uint64_t token) = 0;

  virtual void on_submit(NodeId /*client*/, std::uint64_t /*request_id*/) {}
  virtual void on_proof(NodeId /*client*/, const ReplyMsg&, bool /*verified*/, std::uint64_t /*latency*/) {}
  virtual void on_resend(NodeId /*client*/, std::uint64_t /*request_id*/, std::uint64_t /*next_timeout*/) {}
};

// True iff the commitment is a valid leader signature over a secret commitment and the
// QC's secret hashes to it at the same counter.
bool verify_proof(const ReplyMsg& reply, const Pki& pki);

class Client {
 public:
  Client(NodeId id, ClientConfig cfg, std::shared_ptr<const Pki> pki, ClientEnv& env);

  NodeId id() const { return id_; }
  ReplicaId known_leader() const { return leader_; }

  // Queues an operation; it is sent once a window slot is free.
  void enqueue(Operation op);
  // Sends immediately regardless of the window.
  std::uint64_t submit(Operation op);

  void on_message(NodeId src, const Message& msg);
  void on_timer(std::uint64_t token);

  std::size_t outstanding() const { return pending_.size(); }
  std::size_t backlog() const { return backlog_.size(); }
  std::size_t completed() const { return completed_; }
  bool idle() const { return pending_.empty() && backlog_.empty(); }

 private:
  struct Pending {
    ClientRequest request;
    std::uint64_t submitted = 0;
    std::uint64_t timeout = 0;
    std::uint64_t timer = 0;
    bool commitment = false;
    bool execution = false;
  };

  bool satisfied(const Pending& p) const;
  void fill_window();

  NodeId id_;
  ClientConfig cfg_;
  std::shared_ptr<const Pki> pki_;
  ClientEnv& env_;
  ReplicaId leader_ = 0;
  std::uint64_t next_request_ = 0;
  std::uint64_t next_token_ = 1;
  std::map<std::uint64_t, Pending> pending_;
  std::map<std::uint64_t, std::uint64_t> timers_;  // token -> request id
  std::deque<Operation> backlog_;
  std::size_t completed_ = 0;
};

}  // namespace tbft
