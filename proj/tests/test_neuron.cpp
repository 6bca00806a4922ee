#include <doctest.h>

#include <cmath>

#include "dwsnn/error.hpp"
#include "dwsnn/neuron.hpp"
#include "dwsnn/rng.hpp"

using namespace dwsnn;

TEST_CASE("drive voltage maps and clamps") {
  const VoltageMap vmap = default_voltage_map(SwitchingModel(default_binary_model()));
  CHECK(vmap.v_mid == doctest::Approx(1.8));
  CHECK(vmap.v_gain == doctest::Approx(0.2));
  CHECK(drive_voltage(vmap, 0.0) == doctest::Approx(1.8));
  CHECK(drive_voltage(vmap, 3.0) == doctest::Approx(2.2));   // lands on the edge
  CHECK(drive_voltage(vmap, -100.0) == doctest::Approx(1.0));
}

TEST_CASE("binary neuron mean-field at zero pre-activation is one half") {
  const BinaryNeuronParams params = default_binary_neuron();
  CHECK(binary_step(params, 0.0, nullptr, Mode::MeanField) ==
        doctest::Approx(0.5));
}

TEST_CASE("binary neuron with certain switching always spikes") {
  BinaryNeuronParams params = default_binary_neuron();
  params.device = SwitchingTable({1.0, 2.2}, {1.0, 1.0});  // forced p = 1
  RngStream rng(5);
  for (int i = 0; i < 200; ++i)
    CHECK(binary_step(params, 0.0, &rng, Mode::Sampled) == 1.0);
}

TEST_CASE("binary sampled spike fraction matches the mean-field value") {
  const BinaryNeuronParams params = default_binary_neuron();
  RngStream rng(77);
  const int n = 100000;
  int spikes = 0;
  for (int i = 0; i < n; ++i)
    spikes += binary_step(params, 0.0, &rng, Mode::Sampled) > 0.5 ? 1 : 0;
  const double fraction = static_cast<double>(spikes) / n;
  CHECK(fraction > 0.495);
  CHECK(fraction < 0.505);
}

TEST_CASE("binary surrogate matches finite differences away from the clamp") {
  const BinaryNeuronParams params = default_binary_neuron();
  const double h = 1e-7;
  for (double a : {-2.0, -0.7, 0.0, 0.4, 1.9}) {
    double d = 0.0;
    binary_step(params, a, nullptr, Mode::MeanField, &d);
    const double up = binary_step(params, a + h, nullptr, Mode::MeanField);
    const double down = binary_step(params, a - h, nullptr, Mode::MeanField);
    const double fd = (up - down) / (2.0 * h);
    CHECK(std::abs(d - fd) / std::max(std::abs(fd), 1e-9) < 1e-6);
  }
  // saturated: no gradient through the hard clamp
  double d = 1.0;
  binary_step(params, 50.0, nullptr, Mode::MeanField, &d);
  CHECK(d == 0.0);
}

namespace {

MWNeuronParams uniform_mw(double q) {
  MWNeuronParams params = default_mw_neuron();
  for (auto& tr : params.device.transitions)
    tr = SwitchingTable({0.0, 5.5}, {q, q});
  return params;
}

}  // namespace

TEST_CASE("mw neuron with certain transitions spikes every 4 steps") {
  const MWNeuronParams params = uniform_mw(1.0);
  RngStream rng(9);
  int state = 1;
  for (int step = 1; step <= 12; ++step) {
    const MWStepResult r = mw_step(params, state, 0.0, &rng, Mode::Sampled);
    state = r.state;
    if (step % 4 == 0)
      CHECK(r.spike == 1.0);
    else
      CHECK(r.spike == 0.0);
  }
}

TEST_CASE("mw neuron with impossible transitions stays frozen") {
  const MWNeuronParams params = uniform_mw(0.0);
  RngStream rng(9);
  int state = 1;
  for (int step = 0; step < 50; ++step) {
    const MWStepResult r = mw_step(params, state, 0.0, &rng, Mode::Sampled);
    CHECK(r.spike == 0.0);
    CHECK(r.state == 1);
    state = r.state;
  }
}

TEST_CASE("mw long-run firing rate approaches q/4 for uniform q") {
  const MWNeuronParams params = uniform_mw(0.5);
  RngStream rng(123);
  int state = 1;
  long spikes = 0;
  const int n = 100000;
  for (int step = 0; step < n; ++step) {
    const MWStepResult r = mw_step(params, state, 0.0, &rng, Mode::Sampled);
    state = r.state;
    if (r.spike > 0.5) ++spikes;
  }
  const double rate = static_cast<double>(spikes) / n;
  CHECK(std::abs(rate - 0.125) / 0.125 < 0.02);
  // mean-field reports the same steady state
  CHECK(mw_meanfield_rate(params, 0.0) == doctest::Approx(0.125));
}

TEST_CASE("mw state outside the chain is a corruption error") {
  const MWNeuronParams params = default_mw_neuron();
  RngStream rng(1);
  CHECK_THROWS_AS(mw_step(params, 0, 0.0, &rng, Mode::Sampled), Error);
  CHECK_THROWS_AS(mw_step(params, 6, 0.0, &rng, Mode::Sampled), Error);
}

TEST_CASE("mw mean-field derivative matches finite differences") {
  const MWNeuronParams params = default_mw_neuron();
  const double h = 1e-7;
  for (double a : {-1.5, -0.3, 0.0, 0.8, 2.1}) {
    double d = 0.0;
    mw_meanfield_rate(params, a, &d);
    const double fd =
        (mw_meanfield_rate(params, a + h) - mw_meanfield_rate(params, a - h)) /
        (2.0 * h);
    CHECK(std::abs(d - fd) / std::max(std::abs(fd), 1e-9) < 1e-5);
  }
}

TEST_CASE("lif decays below threshold without spiking") {
  LIFParams params;
  const LifStepResult r = lif_step(params, 0.5, 0.0);
  CHECK(r.spike == 0.0);
  CHECK(r.membrane == doctest::Approx(0.45));
}

TEST_CASE("lif spikes and resets on threshold crossing") {
  LIFParams params;
  const LifStepResult r = lif_step(params, 0.5, 0.6);  // v' = 1.05 - wait
  // beta*0.5 + 0.6 = 1.05 >= 1.0
  CHECK(r.spike == 1.0);
  CHECK(r.membrane == 0.0);
}

TEST_CASE("lif subthreshold drive never spikes at its fixed point") {
  LIFParams params;
  double v = 0.0;
  for (int t = 0; t < 500; ++t) {
    const LifStepResult r = lif_step(params, v, 0.05);
    CHECK(r.spike == 0.0);
    v = r.membrane;
  }
  CHECK(v == doctest::Approx(0.5).epsilon(1e-6));  // i/(1-beta)
}

TEST_CASE("readout integrates and decays without spiking") {
  CHECK(readout_step(0.9, 2.0, 0.0) == doctest::Approx(1.8));
  double m = 0.0;
  for (int t = 0; t < 400; ++t) m = readout_step(0.9, m, 1.0);
  CHECK(m == doctest::Approx(10.0).epsilon(1e-6));  // 1/(1-0.9)
  CHECK(readout_step(0.0, 123.0, 0.7) == doctest::Approx(0.7));
}

TEST_CASE("sampled steps replay exactly with the same stream") {
  const BinaryNeuronParams params = default_binary_neuron();
  std::vector<double> first, second;
  for (int pass = 0; pass < 2; ++pass) {
    RngStream rng = derive_stream(404, {1, 2});
    auto& out = pass == 0 ? first : second;
    for (int i = 0; i < 500; ++i)
      out.push_back(binary_step(params, 0.3, &rng, Mode::Sampled));
  }
  CHECK(first == second);
}

TEST_CASE("lif soft spike derivative is exact") {
  LIFParams params;
  const double h = 1e-7;
  for (double v : {0.2, 0.9, 1.0, 1.1, 2.5}) {
    const double fd =
        (lif_soft_spike(params, v + h) - lif_soft_spike(params, v - h)) /
        (2.0 * h);
    CHECK(lif_soft_spike_derivative(params, v) ==
          doctest::Approx(fd).epsilon(1e-4));
  }
  CHECK(lif_surrogate(params, 1.0) == doctest::Approx(1.0));
}
