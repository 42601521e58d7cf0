#include "sava/sava.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "engine.hpp"
#include "error.hpp"
#include "evidence.hpp"
#include "experiment.hpp"

struct sava_engine {
  sava::Engine engine;
};

namespace {

thread_local std::string last_error;

sava_status set_error(sava_status s, const char* what) {
  last_error = what;
  return s;
}

template <class F>
sava_status guarded(F&& f) {
  try {
    f();
    return SAVA_OK;
  } catch (const sava::Error& e) {
    return set_error(static_cast<sava_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(SAVA_ERR_USAGE, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SAVA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SAVA_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(SAVA_ERR_INTERNAL, "unknown failure");
  }
}

#define SAVA_REQUIRE(cond)                                                   \
  do {                                                                       \
    if (!(cond)) return set_error(SAVA_ERR_INVALID_ARGUMENT, #cond " failed"); \
  } while (0)

sava::EngineMode to_mode(const sava_mode& m) {
  using namespace sava;
  switch (m.kind) {
    case SAVA_MODE_SYMMETRIC: return mode::Symmetric{m.alpha, m.k};
    case SAVA_MODE_CLASSICAL: return mode::Classical{m.alpha, m.k};
    case SAVA_MODE_ARM_SPECIFIC: return mode::ArmSpecific{{m.alpha, m.k}, {m.alpha_b, m.k_b}};
    case SAVA_MODE_SAVASPECIAL: return mode::SavaSpecial{m.alpha, m.k};
    case SAVA_MODE_METHOD1: return mode::AdversarialMethod1{m.alpha, m.k};
    case SAVA_MODE_METHOD2: return mode::AdversarialMethod2{m.alpha};
  }
  fail(ErrorCode::InvalidArgument, "unknown engine mode");
}

sava::EvidenceKind to_evidence(const sava_evidence& e) {
  using namespace sava;
  switch (e.kind) {
    case SAVA_EVIDENCE_HOEFFDING: return HoeffdingBounded{e.bound, e.alpha};
    case SAVA_EVIDENCE_GAUSSIAN_LR: return GaussianLR{e.mu_abs};
    case SAVA_EVIDENCE_DIRECT: return DirectPValues{};
  }
  fail(ErrorCode::InvalidArgument, "unknown evidence kind");
}

const sava::TaskState& task_of(const sava_engine* e, std::size_t task) {
  const auto& tasks = e->engine.tasks();
  if (task == 0 || task > tasks.size())
    sava::fail(sava::ErrorCode::InvalidArgument, "task index " + std::to_string(task) + " out of range");
  return tasks[task - 1];
}

}  // namespace

extern "C" {

const char* sava_version(void) { return "1.0.0"; }

const char* sava_status_string(sava_status s) {
  switch (s) {
    case SAVA_OK: return "ok";
    case SAVA_ERR_DOMAIN: return "domain error";
    case SAVA_ERR_OUT_OF_SUPPORT: return "observation out of support";
    case SAVA_ERR_PROTOCOL: return "protocol error";
    case SAVA_ERR_INVARIANT: return "invariant violated";
    case SAVA_ERR_IO: return "i/o error";
    case SAVA_ERR_PARSE: return "parse error";
    case SAVA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SAVA_ERR_UNSUPPORTED: return "unsupported";
    case SAVA_ERR_USAGE: return "usage error";
    case SAVA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sava_last_error(void) { return last_error.c_str(); }

sava_status sava_engine_create(const sava_mode* mode, const sava_evidence* evidence,
                               const int64_t* grid_times, size_t n_times, const int64_t* arrivals,
                               size_t n_tasks, sava_engine** out) {
  SAVA_REQUIRE(mode && evidence && out);
  SAVA_REQUIRE(grid_times || n_times == 0);
  SAVA_REQUIRE(arrivals || n_tasks == 0);
  *out = nullptr;
  return guarded([&] {
    sava::DecisionGrid grid;
    grid.times.assign(grid_times, grid_times + n_times);
    grid.arrivals.assign(arrivals, arrivals + n_tasks);
    *out = new sava_engine{sava::Engine(to_mode(*mode), to_evidence(*evidence), std::move(grid))};
  });
}

void sava_engine_destroy(sava_engine* engine) { delete engine; }

sava_status sava_engine_step(sava_engine* engine, int64_t t, const sava_batch* batches,
                             size_t n_batches) {
  SAVA_REQUIRE(engine);
  SAVA_REQUIRE(batches || n_batches == 0);
  return guarded([&] {
    std::vector<sava::TaskBatch> in(n_batches);
    for (size_t i = 0; i < n_batches; ++i) {
      const auto& b = batches[i];
      if (b.n_samples > 0 && !b.samples)
        sava::fail(sava::ErrorCode::InvalidArgument, "batch samples pointer is null");
      in[i].task = b.task;
      if (b.n_samples > 0) in[i].samples.assign(b.samples, b.samples + b.n_samples);
      if (b.has_direct) in[i].direct = sava::PValuePair{b.p_a, b.p_b};
    }
    engine->engine.step(t, in);
  });
}

sava_status sava_engine_next_time(const sava_engine* engine, int64_t* t, int* done) {
  SAVA_REQUIRE(engine && t && done);
  *done = engine->engine.done() ? 1 : 0;
  *t = *done ? 0 : engine->engine.next_time();
  return SAVA_OK;
}

sava_status sava_engine_upcoming(const sava_engine* engine, size_t* ids, size_t cap, size_t* count) {
  SAVA_REQUIRE(engine && count);
  SAVA_REQUIRE(ids || cap == 0);
  return guarded([&] {
    const auto active = engine->engine.upcoming_active();
    *count = active.size();
    for (size_t i = 0; i < active.size() && i < cap; ++i) ids[i] = active[i];
  });
}

sava_status sava_engine_decision(const sava_engine* engine, size_t task, char* decision) {
  SAVA_REQUIRE(engine && decision);
  return guarded([&] { *decision = sava::to_char(task_of(engine, task).decision); });
}

sava_status sava_engine_pvalues(const sava_engine* engine, size_t task, double* p_a, double* p_b) {
  SAVA_REQUIRE(engine && p_a && p_b);
  return guarded([&] {
    const auto& s = task_of(engine, task);
    *p_a = s.evidence.p_a;
    *p_b = s.evidence.p_b;
  });
}

sava_status sava_engine_levels(const sava_engine* engine, size_t task, double* level_a,
                               double* level_b) {
  SAVA_REQUIRE(engine && level_a && level_b);
  return guarded([&] {
    const auto& s = task_of(engine, task);
    *level_a = s.levels.a;
    *level_b = s.levels.b;
  });
}

sava_status sava_engine_fsr_hat(const sava_engine* engine, double* value) {
  SAVA_REQUIRE(engine && value);
  const auto& s = engine->engine.summaries();
  *value = s.empty() ? 0.0 : s.back().fsr_hat;
  return SAVA_OK;
}

sava_status sava_engine_selected(const sava_engine* engine, size_t* n_a, size_t* n_b) {
  SAVA_REQUIRE(engine && n_a && n_b);
  *n_a = engine->engine.ledger().count_selected(sava::Arm::A);
  *n_b = engine->engine.ledger().count_selected(sava::Arm::B);
  return SAVA_OK;
}

sava_status sava_lambda(uint64_t r, double alpha, double* value) {
  SAVA_REQUIRE(value);
  return guarded([&] { *value = sava::lambda_schedule(r, alpha); });
}

sava_status sava_wilcoxon(const double* xs, size_t n, double* p_a, double* p_b) {
  SAVA_REQUIRE(p_a && p_b);
  SAVA_REQUIRE(xs || n == 0);
  return guarded([&] {
    const auto w = sava::fixed_p_wilcoxon({xs, n});
    *p_a = w.p_a;
    *p_b = w.p_b;
  });
}

sava_status sava_ztest(const double* xs, size_t n, double sigma, double* p_a, double* p_b) {
  SAVA_REQUIRE(p_a && p_b);
  SAVA_REQUIRE(xs || n == 0);
  return guarded([&] {
    const auto p = sava::fixed_p_ztest({xs, n}, sigma);
    *p_a = p.a;
    *p_b = p.b;
  });
}

sava_status sava_run(const char* request_json, char** summary) {
  SAVA_REQUIRE(request_json);
  if (summary) *summary = nullptr;
  return guarded([&] {
    nlohmann::json request;
    try {
      request = nlohmann::json::parse(request_json);
    } catch (const nlohmann::json::parse_error& e) {
      sava::fail(sava::ErrorCode::Usage, std::string("malformed run request: ") + e.what());
    }
    const auto spec = sava::resolve_spec(request);
    const std::string text = sava::execute(spec).dump();
    if (summary) {
      char* copy = static_cast<char*>(std::malloc(text.size() + 1));
      if (!copy) throw std::bad_alloc();
      std::memcpy(copy, text.c_str(), text.size() + 1);
      *summary = copy;
    }
  });
}

void sava_string_free(char* s) { std::free(s); }

}  // extern "C"
