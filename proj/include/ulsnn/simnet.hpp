#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

namespace ulsnn {

// Deterministic in-process message bus with a virtual clock. Messages are
// delivered in (delivery time, send order) order, so a run is a pure function
// of the sequence of send() calls.
template <class Msg>
class SimNetwork {
 public:
  struct Envelope {
    double time = 0.0;
    std::uint64_t seq = 0;
    std::size_t src = 0;
    std::size_t dst = 0;
    Msg msg;
  };

  explicit SimNetwork(std::size_t endpoints) : endpoints_(endpoints) {}

  std::size_t endpoints() const { return endpoints_; }
  double now() const { return now_; }
  bool empty() const { return queue_.empty(); }
  std::uint64_t messages_sent() const { return seq_; }

  void send(std::size_t src, std::size_t dst, Msg msg, double delay = 0.0) {
    if (src >= endpoints_ || dst >= endpoints_) throw std::out_of_range("SimNetwork::send endpoint");
    if (delay < 0.0) throw std::invalid_argument("SimNetwork::send negative delay");
    queue_.push(Envelope{now_ + delay, seq_++, src, dst, std::move(msg)});
  }

  // Removes the next message and advances the clock to its delivery time.
  Envelope receive() {
    if (queue_.empty()) throw std::logic_error("SimNetwork::receive on empty network");
    Envelope e = queue_.top();
    queue_.pop();
    now_ = e.time;
    return e;
  }

  void advance_to(double t) {
    if (t > now_) now_ = t;
  }

 private:
  struct Later {
    bool operator()(const Envelope& a, const Envelope& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::size_t endpoints_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Envelope, std::vector<Envelope>, Later> queue_;
};

}  // namespace ulsnn
