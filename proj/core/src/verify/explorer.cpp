#include "cohbench/verify/explorer.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <unordered_set>

#include "cohbench/dev/drivers.hpp"
#include "cohbench/system.hpp"

namespace cohbench::verify {

namespace {

using coh::CacheLineState;

// Scheduler that turns every runnable action into an explicit choice. Delay
// values are ignored: delivery and processing order is what is explored.
class ChoiceScheduler final : public sim::Scheduler {
 public:
  sim::SimTime now() const override { return 0; }

  std::uint64_t schedule(sim::SimTime, std::function<void()> fn,
                         sim::EventClass cls, std::string label) override {
    if (cls == sim::EventClass::Guard) return 0;  // masked watchdogs
    pending_.push_back({std::move(label), std::move(fn)});
    return pending_.size();
  }

  sim::Rng& rng() override { return rng_; }
  void raise_fault(std::string what) override {
    faulted_ = true;
    if (fault_.empty()) fault_ = std::move(what);
  }
  void note_link_send() override {}
  void note_link_delivery() override {}

  std::size_t runnable() const { return pending_.size(); }

  void fire(std::size_t idx) {
    auto item = std::move(pending_[idx]);
    pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(idx));
    item.fn();
  }

  void encode(std::string& out) const {
    std::vector<std::string> labels;
    labels.reserve(pending_.size());
    for (const auto& p : pending_) labels.push_back(p.label);
    std::sort(labels.begin(), labels.end());
    out += "Q[";
    for (const auto& l : labels) {
      out += l;
      out += ';';
    }
    out += ']';
  }

  std::string label_of(std::size_t idx) const { return pending_[idx].label; }
  bool faulted() const { return faulted_; }
  const std::string& fault() const { return fault_; }

 private:
  struct Item {
    std::string label;
    std::function<void()> fn;
  };
  std::vector<Item> pending_;
  sim::Rng rng_{0};
  bool faulted_ = false;
  std::string fault_;
};

struct Model {
  ChoiceScheduler sched;
  SystemParams params;
  std::unique_ptr<System> sys;
  dev::ChannelId channel = 0;
  std::unique_ptr<dev::InvokeDriver> driver;
  int epochs_done = 0;
  int epochs_target = 0;
  bool protocol_fault = false;
  std::string fault_note;
  coh::LineId line_b;  // request side at open (starts Exclusive at the CPU)
  coh::LineId line_a;  // response side at open (starts Invalid at the CPU)

  explicit Model(const ExploreOptions& options) {
    Config cfg;
    cfg.set("link.reorder", "off");
    if (options.hazard) {
      cfg.set("tad.count", "1");
      cfg.set("tad.capacity", "1");
    }
    cfg.set("dev.exclusive_return", options.exclusive_return ? "on" : "off");
    params = SystemParams::from_config(cfg);
    sys = std::make_unique<System>(sched, params);
    channel = sys->open_invoke_channel(1);
    driver = std::make_unique<dev::InvokeDriver>(sched, sys->cpu(),
                                                 sys->device(), channel);
    line_b = sys->device().channel(channel).group0.front();
    line_a = sys->device().channel(channel).group1.front();
    epochs_target = options.epochs;
    start_next_invoke();
  }

  void start_next_invoke() {
    if (epochs_done == epochs_target) return;
    std::vector<std::uint8_t> request(params.line_size);
    for (std::size_t i = 0; i < request.size(); ++i) {
      request[i] = static_cast<std::uint8_t>(epochs_done + 1);
    }
    try {
      driver->invoke(request, params.line_size,
                     [this](dev::InvokeDriver::Result) {
                       ++epochs_done;
                       start_next_invoke();
                     });
    } catch (const coh::ProtocolError& e) {
      protocol_fault = true;
      fault_note = e.what();
    }
  }

  bool step(std::size_t idx) {
    try {
      sched.fire(idx);
    } catch (const coh::ProtocolError& e) {
      protocol_fault = true;
      fault_note = e.what();
      return false;
    }
    return true;
  }

  bool swmr_ok() const {
    // Single CPU cache: writable-at-two-nodes cannot happen, but the
    // directory must agree whenever the CPU holds a line writable.
    for (const coh::LineId& line : {line_a, line_b}) {
      const CacheLineState st = sys->cpu().line_state(line);
      if (st == CacheLineState::Exclusive || st == CacheLineState::Modified ||
          st == CacheLineState::Owned) {
        const auto entry = sys->dir().entry(line);
        if (!entry.owner || *entry.owner != System::kCpu) return false;
      }
    }
    return true;
  }

  bool done() const { return epochs_done == epochs_target; }

  // Terminal quiescent check: the pair's CPU-visible states must equal the
  // pre-run states with roles swapped once per epoch.
  bool swap_ok() const {
    const CacheLineState a = sys->cpu().line_state(line_a);
    const CacheLineState b = sys->cpu().line_state(line_b);
    if (epochs_target % 2 == 1) {
      return a == CacheLineState::Exclusive && b == CacheLineState::Invalid;
    }
    return a == CacheLineState::Invalid && b == CacheLineState::Exclusive;
  }

  std::string encode() const {
    std::string out;
    sys->cpu().encode(out);
    sys->dir().encode(out);
    sys->device().encode(out);
    driver->encode(out);
    out += 'e';
    out += std::to_string(epochs_done);
    sched.encode(out);
    return out;
  }
};

}  // namespace

ExploreReport explore_invoke_protocol(const ExploreOptions& options) {
  ExploreReport report;

  // Re-execution search: a state is reached by replaying its choice path
  // from the initial state. Deduplication is on the full encoded state.
  auto run_path = [&options](const std::vector<std::uint16_t>& path)
      -> std::unique_ptr<Model> {
    auto m = std::make_unique<Model>(options);
    for (std::uint16_t idx : path) {
      if (m->protocol_fault) break;
      m->step(idx);
    }
    return m;
  };

  std::unordered_set<std::string> visited;
  std::deque<std::vector<std::uint16_t>> frontier;

  {
    auto m0 = run_path({});
    visited.insert(m0->encode());
    frontier.push_back({});
  }
  report.states = 1;

  while (!frontier.empty()) {
    std::vector<std::uint16_t> path = std::move(frontier.front());
    frontier.pop_front();
    auto m = run_path(path);
    if (m->protocol_fault) {
      report.protocol_fault = true;
      if (report.note.empty()) report.note = m->fault_note;
      continue;
    }
    if (!m->swmr_ok()) {
      report.swmr_violation = true;
      if (report.note.empty()) report.note = "coherence ownership mismatch";
      continue;
    }
    const std::size_t runnable = m->sched.runnable();
    if (runnable == 0) {
      if (m->done()) {
        ++report.terminals;
        if (!m->swap_ok()) {
          report.swap_violation = true;
          if (report.note.empty()) {
            report.note = "terminal state is not the swapped quiescent state";
          }
        }
      } else {
        ++report.deadlocks;
        if (report.deadlock_example.empty()) {
          auto mm = std::make_unique<Model>(options);
          std::string trace;
          for (std::uint16_t idx : path) {
            trace += mm->sched.label_of(idx);
            trace += " -> ";
            mm->step(idx);
          }
          trace += "(stuck)";
          report.deadlock_example = trace;
        }
      }
      continue;
    }
    for (std::size_t i = 0; i < runnable; ++i) {
      auto child_path = path;
      child_path.push_back(static_cast<std::uint16_t>(i));
      auto child = run_path(child_path);
      ++report.transitions;
      if (child->protocol_fault) {
        report.protocol_fault = true;
        if (report.note.empty()) report.note = child->fault_note;
        continue;
      }
      std::string key = child->encode();
      if (visited.insert(std::move(key)).second) {
        ++report.states;
        if (report.states > options.max_states) {
          report.note = "state budget exceeded";
          return report;
        }
        frontier.push_back(std::move(child_path));
      }
    }
  }
  return report;
}

}  // namespace cohbench::verify
