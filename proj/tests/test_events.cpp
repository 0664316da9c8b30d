#include <doctest.h>

#include "eschil/events.hpp"

#include <map>

using namespace eschil;

namespace {

// Session stub: counts simulated windows; samples report how many windows
// have completed, so causality is visible in the SyncA payloads.
class StubSession : public SimulationSession {
public:
    std::vector<Real> sync_samples() override {
        return {static_cast<Real>(windows_done_)};
    }
    Real simulate_window(std::uint64_t, Real, Real, const PwmConfig&, EventLog&) override {
        ++windows_done_;
        return 0.0;
    }

private:
    std::uint64_t windows_done_ = 0;
};

std::map<EventKind, int> kind_counts(const EventLog& log) {
    std::map<EventKind, int> counts;
    for (const auto& e : log.events()) counts[e.kind]++;
    return counts;
}

}  // namespace

TEST_CASE("idle cycles emit exactly one event of each kind per cycle") {
    NoneController ctl;
    StubSession session;
    InstantDuration instant;
    EventScheduler sched({25e-6, 0.0}, instant, ctl, session);
    sched.run(50e-6);

    auto counts = kind_counts(sched.log());
    CHECK(counts[EventKind::ClockP1] == 2);
    CHECK(counts[EventKind::SyncA] == 2);
    CHECK(counts[EventKind::SyncB] == 2);
    CHECK(counts[EventKind::ControlA] == 2);
    CHECK(counts[EventKind::ControlB] == 2);
    CHECK(counts[EventKind::SimDone] == 2);
    CHECK(sched.frozen_cycles() == 0);
}

TEST_CASE("sync pair lands exactly on the cycle boundary") {
    NoneController ctl;
    StubSession session;
    InstantDuration instant;
    EventScheduler sched({25e-6, 0.0}, instant, ctl, session);
    sched.run(75e-6);
    for (const auto& e : sched.log().events()) {
        if (e.kind == EventKind::SyncA || e.kind == EventKind::SyncB) {
            const Real edge = static_cast<Real>(e.kind == EventKind::SyncB ? e.cycle + 1
                                                                           : e.cycle) * 25e-6;
            CHECK(e.t_sim == edge);
        }
    }
}

TEST_CASE("overrunning window freezes the controller for the skipped edges") {
    // Window 0 takes 60 us of modeled wall time against a 25 us period:
    // the 25 and 50 us edges pass frozen, the 75 us edge syncs.
    NoneController ctl;
    StubSession session;
    ScriptedDuration script({60e-6});
    EventScheduler sched({25e-6, 0.0}, script, ctl, session);
    sched.run(75e-6);
    CHECK(sched.frozen_cycles() == 2);

    int frozen_clocks = 0;
    for (const auto& e : sched.log().events()) {
        if (e.kind == EventKind::ClockP1 && e.payload == "frozen") ++frozen_clocks;
    }
    CHECK(frozen_clocks == 2);
}

TEST_CASE("completion at or before the edge does not freeze") {
    NoneController ctl;
    StubSession session;
    ScriptedDuration script({25e-6, 10e-6});
    EventScheduler sched({25e-6, 0.0}, script, ctl, session);
    sched.run(75e-6);
    CHECK(sched.frozen_cycles() == 0);
}

TEST_CASE("wall time never changes the sampled payloads") {
    auto payloads = [](DurationSource& ds) {
        NoneController ctl;
        StubSession session;
        EventScheduler sched({25e-6, 0.0}, ds, ctl, session);
        sched.run(250e-6);
        return sched.sync_a_payloads();
    };
    InstantDuration instant;
    ScriptedDuration slow(std::vector<Real>(10, 100e-6));
    CHECK(payloads(instant) == payloads(slow));
}

TEST_CASE("causality: samples at a sync reflect only completed windows") {
    NoneController ctl;
    StubSession session;
    InstantDuration instant;
    EventScheduler sched({25e-6, 0.0}, instant, ctl, session);
    sched.run(100e-6);
    const auto& payloads = sched.sync_a_payloads();
    REQUIRE(payloads.size() == 4);
    for (std::size_t k = 0; k < payloads.size(); ++k) {
        CHECK(payloads[k][0] == static_cast<Real>(k));
    }
}

TEST_CASE("trace is ordered and the sampling delay shifts the control events") {
    NoneController ctl;
    StubSession session;
    InstantDuration instant;
    EventScheduler sched({25e-6, 5e-6}, instant, ctl, session);
    sched.run(50e-6);

    Real last_t = -1.0;
    std::uint64_t last_seq = 0;
    bool first = true;
    for (const auto& e : sched.log().ordered()) {
        CHECK(e.t_sim >= last_t);
        if (!first && e.t_sim == last_t) CHECK(e.seq > last_seq);
        last_t = e.t_sim;
        last_seq = e.seq;
        first = false;
        if (e.kind == EventKind::ControlA || e.kind == EventKind::ControlB) {
            CHECK(e.t_sim == static_cast<Real>(e.cycle) * 25e-6 + 5e-6);
        }
    }
}

TEST_CASE("cycles must be driven in order") {
    NoneController ctl;
    StubSession session;
    InstantDuration instant;
    EventScheduler sched({25e-6, 0.0}, instant, ctl, session);
    sched.run_cycle(0);
    CHECK_THROWS_AS(sched.run_cycle(2), SimError);
}

TEST_CASE("timing parameters are validated") {
    const CycleTiming zero_period{0.0, 0.0};
    CHECK_THROWS_AS(zero_period.validate(), SimError);
    const CycleTiming delay_too_long{25e-6, 25e-6};
    CHECK_THROWS_AS(delay_too_long.validate(), SimError);
}
