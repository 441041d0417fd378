#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "vidpreload/cli.hpp"
#include "vidpreload/errors.hpp"
#include "vidpreload/planner.hpp"
#include "vidpreload/scoring.hpp"
#include "vidpreload/sim.hpp"
#include "vidpreload/traceio.hpp"

namespace py = pybind11;
using namespace vidpreload;

namespace {

// Feeds are vectors of structs; wrapping keeps them opaque on the Python side
// instead of copying into nested lists on every call.
struct PyFeed {
  Feed feed;
};

Plan to_plan(const std::vector<std::tuple<int, int, int>>& steps) {
  Plan p;
  for (auto [v, c, x] : steps) p.steps.push_back({{v, c}, x});
  return p;
}

std::vector<std::tuple<int, int, int>> from_plan(const Plan& p) {
  std::vector<std::tuple<int, int, int>> out;
  for (const auto& s : p.steps) out.emplace_back(s.chunk.video, s.chunk.chunk, s.variant);
  return out;
}

BandwidthModel to_bandwidth(const std::vector<std::pair<Millis, Kbps>>& samples) {
  std::vector<BandwidthSample> s;
  for (auto [t, k] : samples) s.push_back({t, k});
  return BandwidthModel(std::move(s));
}

py::dict timing_dict(const ChunkTiming& t) {
  py::dict d;
  d["video"] = t.chunk.video;
  d["chunk"] = t.chunk.chunk;
  d["variant"] = t.variant;
  d["download_end"] = t.download_end;
  d["decode_end"] = t.decode_end;
  d["deadline"] = t.buffer_deadline;
  d["playback_start"] = t.playback_start;
  d["stall"] = t.stall;
  d["compute_stall"] = t.compute_stall;
  d["size"] = t.size;
  return d;
}

py::dict metrics_dict(const SessionMetrics& m) {
  py::dict d;
  d["total_stall"] = m.total_stall;
  d["wasted_bytes"] = m.wasted_bytes;
  d["downloaded_bytes"] = m.downloaded_bytes;
  d["played_bytes"] = m.played_bytes;
  d["session_end_bytes"] = m.session_end_bytes;
  d["mean_quality"] = m.mean_quality;
  d["quality_switches"] = m.quality_switches;
  d["qoe"] = m.qoe;
  d["chunks_played"] = m.chunks_played;
  d["prompt_chunks_played"] = m.prompt_chunks_played;
  d["emergency_fetches"] = m.emergency_fetches;
  d["replans"] = m.replans;
  d["session_length"] = m.session_length;
  return d;
}

Weights make_weights(double q, double v, double s, double b) {
  Weights w{q, v, s, b};
  w.validate();
  return w;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Computation-aware short-video preloading: timelines, planning and simulation.";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidPlan>(m, "InvalidPlan", base.ptr());
  py::register_exception<InfeasibleAllPruned>(m, "InfeasibleAllPruned", base.ptr());
  py::register_exception<SpaceTooLarge>(m, "SpaceTooLarge", base.ptr());
  py::register_exception<TraceMismatch>(m, "TraceMismatch", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<InvalidManifest>(m, "InvalidManifest", base.ptr());
  py::register_exception<EmptyFeed>(m, "EmptyFeed", base.ptr());

  py::class_<PyFeed>(m, "Feed")
      .def("__len__", [](const PyFeed& f) { return f.feed.size(); })
      .def_property_readonly("video_ids",
                             [](const PyFeed& f) {
                               std::vector<std::string> ids;
                               for (const auto& v : f.feed) ids.push_back(v.video_id);
                               return ids;
                             })
      .def("chunk_count", [](const PyFeed& f, int video) { return f.feed.at(video).chunks.size(); })
      .def("to_json", [](const PyFeed& f) { return format_manifest(f.feed); })
      .def("scaled", [](const PyFeed& f, double factor) { return PyFeed{scale_feed(f.feed, factor)}; });

  m.def("load_manifest", [](const std::filesystem::path& p) { return PyFeed{load_manifest(p)}; });
  m.def("parse_manifest", [](const std::string& text) { return PyFeed{parse_manifest(text)}; });
  m.def(
      "synthetic_feed",
      [](std::uint64_t seed, int videos, int chunks) {
        return PyFeed{gen_synthetic_feed(seed, videos, chunks, default_profiles())};
      },
      py::arg("seed"), py::arg("videos"), py::arg("chunks_per_video"));

  m.def(
      "evaluate",
      [](const PyFeed& f, const std::vector<std::tuple<int, int, int>>& plan, Kbps bandwidth, Millis startup) {
        const auto r = evaluate_plan(to_plan(plan), DeviceModel::standard(), BandwidthModel::constant(bandwidth),
                                     PlaybackState::session_start(startup), f.feed);
        py::list out;
        for (const auto& t : r.timings) out.append(timing_dict(t));
        return out;
      },
      py::arg("feed"), py::arg("plan"), py::arg("bandwidth_kbps"), py::arg("startup_ms") = 200);

  m.def(
      "plan",
      [](const PyFeed& f, Kbps bandwidth, int horizon, const std::string& method, Millis startup,
         std::int64_t budget, std::uint64_t seed, std::tuple<double, double, double, double> w) {
        PlanningProblem p;
        p.feed = &f.feed;
        p.bandwidth = BandwidthModel::constant(bandwidth);
        p.state = PlaybackState::session_start(startup);
        p.weights = std::apply(make_weights, w);
        p.candidates = horizon_chunks(f.feed, p.state, horizon);
        PlanResult r;
        if (method == "mcts") {
          PlannerConfig c;
          c.horizon = horizon;
          c.simulation_budget = budget;
          c.rng_seed = seed;
          r = plan_mcts(p, c);
        } else if (method == "bruteforce") {
          r = plan_bruteforce(p);
        } else if (method == "sequential") {
          r = plan_sequential_baseline(p);
        } else {
          throw py::value_error("method must be mcts, bruteforce or sequential");
        }
        py::dict d;
        d["plan"] = from_plan(r.plan);
        d["utility"] = r.utility;
        d["simulations"] = r.stats.simulations;
        d["complete"] = r.stats.complete;
        return d;
      },
      py::arg("feed"), py::arg("bandwidth_kbps"), py::arg("horizon") = 4, py::arg("method") = "mcts",
      py::arg("startup_ms") = 200, py::arg("budget") = 20000, py::arg("seed") = 1,
      py::arg("weights") = std::make_tuple(1.0, 1.0, 3.0, 0.3));

  m.def(
      "simulate",
      [](const PyFeed& f, const std::vector<std::pair<Millis, Kbps>>& bandwidth,
         const std::vector<std::pair<std::string, Millis>>& watch, const std::string& strategy, std::uint64_t seed,
         std::int64_t budget, bool events) {
        SessionTrace trace;
        for (const auto& [id, ms] : watch) trace.records.push_back({id, ms});
        SimConfig cfg;
        cfg.master_seed = seed;
        cfg.planner.simulation_budget = budget;
        cfg.record_events = events;
        SessionResult r;
        {
          py::gil_scoped_release release;
          r = run_session(f.feed, to_bandwidth(bandwidth), trace, parse_strategy(strategy), DeviceModel::standard(),
                          Weights{}, cfg);
        }
        py::dict d = metrics_dict(r.metrics);
        d["conserves_bytes"] = r.metrics.conserves_bytes();
        if (events) d["events"] = format_event_log(r.events);
        return d;
      },
      py::arg("feed"), py::arg("bandwidth"), py::arg("watch"), py::arg("strategy") = "mcts", py::arg("seed") = 1,
      py::arg("budget") = SimConfig::default_planner().simulation_budget, py::arg("events") = false);

  m.def("ratio_pct", &ratio_pct);
  m.def("search_space_size", [](const PyFeed& f, int horizon) {
    PlanningProblem p;
    p.feed = &f.feed;
    p.candidates = horizon_chunks(f.feed, PlaybackState::session_start(), horizon);
    return search_space_size(p);
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
