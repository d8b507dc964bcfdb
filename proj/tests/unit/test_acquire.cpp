#include <doctest.h>

#include <chrono>
#include <cmath>

#include "doppler/acquire/synthesize.hpp"
#include "doppler/estimate/autocorrelation.hpp"

using namespace doppler;
using namespace doppler::phantom;
using doppler::acquire::PsfModel;
using doppler::acquire::default_psf;
using doppler::acquire::synthesize_ensemble;

namespace {

// Radial outflow covering the whole grid: every scatterer recedes from the
// apex at exactly `speed`, so each pixel's slow-time signal is a pure tone
// with per-shot phase -pi * speed / v_N.
struct ToneSetup {
  PhantomState state;
  ScanGeometry geo;
  AcquisitionParams params;

  ToneSetup(double speed, double prf, int packet, std::uint64_t seed) {
    params.prf_hz = prf;
    params.packet_size = packet;
    geo = ScanGeometry::symmetric(0.06, 0.10, 0.25, 32, 5);
    const auto psf = default_psf(params);
    const double pad_ax = psf.cutoff_sigmas * psf.axial_sigma_m;
    const auto support = Support::sector(0.06 - pad_ax - 1e-3, 0.10 + pad_ax + 2e-3,
                                         -0.125 - 0.08, 0.125 + 0.08);
    state = make_cloud(FlowField::radial(Vec2::Zero(), speed), support, 1.2, seed);
  }

  IQEnsemble run(std::uint64_t seed = 99) const {
    return synthesize_ensemble(state, geo, params, default_psf(params), std::nullopt, seed);
  }
};

double max_abs(const IQEnsemble& iq) {
  double m = 0.0;
  for (const auto& f : iq.frames) m = std::max(m, f.abs().maxCoeff());
  return m;
}

}  // namespace

TEST_CASE("default psf from the acquisition parameters") {
  AcquisitionParams p;
  const PsfModel psf = default_psf(p);
  // 6 carrier cycles at 2.7 MHz, two-way: 1.7111 mm envelope FWHM
  const double extent = p.doppler_cycles / p.center_frequency_hz * p.sound_speed_mps / 2.0;
  CHECK(extent == doctest::Approx(1.7111111e-3).epsilon(1e-6));
  CHECK(psf.axial_sigma_m == doctest::Approx(extent / 2.3548200450309493).epsilon(1e-12));
  CHECK(psf.axial_sigma_m == doctest::Approx(7.26645e-4).epsilon(1e-4));
  // 0.42 lambda / D with a 19.2 mm aperture
  CHECK(psf.lateral_sigma_rad == doctest::Approx(0.012477).epsilon(1e-4));
  CHECK(psf.lateral_sigma_at(0.05) == psf.lateral_sigma_at(0.15));
  CHECK(psf.cutoff_sigmas == 6.0);
}

TEST_CASE("firing schedule is line by line") {
  const doppler::acquire::FiringSchedule fs{6000.0, 8};
  CHECK(fs.shot_time_s(0, 0) == 0.0);
  CHECK(fs.shot_time_s(0, 7) == doctest::Approx(7.0 / 6000.0).epsilon(1e-12));
  CHECK(fs.shot_time_s(1, 0) == doctest::Approx(8.0 / 6000.0).epsilon(1e-12));
  CHECK(fs.shot_time_s(3, 2) == doctest::Approx(26.0 / 6000.0).epsilon(1e-12));
  CHECK(fs.shot_count(40) == 320);
}

TEST_CASE("static scatterers give a constant ensemble with the carrier phase") {
  AcquisitionParams params;
  params.packet_size = 4;
  const auto geo = ScanGeometry::symmetric(0.07, 0.09, 0.3, 21, 3);

  PhantomState st;
  st.flow = FlowField::uniform(Vec2::Zero());
  st.support = Support::sector(0.06, 0.10, -0.2, 0.2);
  const double r0 = geo.radius_m(10);  // exactly on pixel row 10, beam 1
  st.scatterers = {Scatterer{Vec2(0.0, r0), 1.0}};

  const auto iq = synthesize_ensemble(st, geo, params, default_psf(params), std::nullopt, 5);
  for (int k = 1; k < 4; ++k)
    CHECK(((iq.frames[k] - iq.frames[0]).abs().maxCoeff()) == 0.0);

  const Complex s = iq.frames[0](10, 1);
  CHECK(std::abs(s) == doctest::Approx(1.0).epsilon(1e-9));  // peak envelope weight
  const double expected =
      std::remainder(-4.0 * kPi * params.center_frequency_hz * r0 / params.sound_speed_mps,
                     2.0 * kPi);
  CHECK(std::abs(std::arg(s) - expected) < 1e-9);

  // beams 0 and 2 sit ~0.15 rad off this scatterer: far outside the 6 sigma cone
  CHECK(std::abs(iq.frames[0](10, 0)) == 0.0);
  CHECK(std::abs(iq.frames[0](10, 2)) == 0.0);
}

TEST_CASE("uniform radial motion yields an exact slow-time tone") {
  for (const int packet : {2, 8, 32}) {
    const double v = 0.31;
    ToneSetup setup(v, 6000.0, packet, 42);
    const auto iq = setup.run();
    const double v_n = nyquist_velocity(iq.params);
    const double expected = -kPi * v / v_n;
    const double floor = 1e-9 * max_abs(iq);

    int checked = 0;
    double worst = 0.0;
    for (int k = 0; k + 1 < packet; ++k)
      for (int j = 0; j < iq.width(); ++j)
        for (int i = 0; i < iq.height(); ++i) {
          const Complex a = iq.frames[k](i, j);
          const Complex b = iq.frames[k + 1](i, j);
          if (std::abs(a) < floor) continue;
          ++checked;
          worst = std::max(worst, std::abs(std::arg(std::conj(a) * b) - expected));
        }
    CHECK(worst < 1e-9);
    CHECK(checked > 100 * (packet - 1));
  }
}

TEST_CASE("receding flow beyond nyquist wraps to the opposite sign") {
  const double prf = 6000.0;
  AcquisitionParams ref;
  ref.prf_hz = prf;
  const double v_n = nyquist_velocity(ref);

  ToneSetup setup(1.2 * v_n, prf, 4, 7);
  const auto iq = setup.run();
  const double floor = 1e-9 * max_abs(iq);
  // -1.2 pi wraps to +0.8 pi
  double worst = 0.0;
  for (int j = 0; j < iq.width(); ++j)
    for (int i = 0; i < iq.height(); ++i) {
      const Complex a = iq.frames[0](i, j);
      const Complex b = iq.frames[1](i, j);
      if (std::abs(a) < floor) continue;
      worst = std::max(worst, std::abs(std::arg(std::conj(a) * b) - 0.8 * kPi));
    }
  CHECK(worst < 1e-9);
}

TEST_CASE("lag-one phase scales as 1/prf for the same scene") {
  const double v = 0.21;
  ToneSetup a(v, 6000.0, 4, 42);
  ToneSetup b(v, 4500.0, 4, 42);
  const auto iqa = a.run();
  const auto iqb = b.run();
  const auto ra = doppler::estimate::lag_one_autocorrelation(iqa);
  const auto rb = doppler::estimate::lag_one_autocorrelation(iqb);
  const double pa = std::arg(ra.r1(16, 2));
  const double pb = std::arg(rb.r1(16, 2));
  CHECK(pa / pb == doctest::Approx(4500.0 / 6000.0).epsilon(1e-9));
}

TEST_CASE("ensemble is linear in scatterer amplitudes") {
  // zero speed: nothing leaves the support, so no scatterer is respawned
  // with a fresh (unscaled) amplitude, and doubling is an exact bit shift
  ToneSetup setup(0.0, 6000.0, 3, 11);
  const auto iq1 = setup.run();
  ToneSetup scaled = setup;
  for (auto& sc : scaled.state.scatterers) sc.amplitude *= 2.0;
  const auto iq2 = scaled.run();
  REQUIRE(max_abs(iq1) > 0.0);
  for (int k = 0; k < 3; ++k) {
    const double diff = (iq2.frames[k] - 2.0 * iq1.frames[k]).abs().maxCoeff();
    CHECK(diff == 0.0);
  }
}

TEST_CASE("synthesis is deterministic under a fixed seed") {
  AcquisitionParams params;
  params.packet_size = 3;
  const auto geo = ScanGeometry::symmetric(0.06, 0.09, 0.4, 24, 4);
  auto flow = FlowField::rigid_rotation(Vec2(0.0, 0.075), 8.0, 0.012);
  flow.fluctuation_frac = 0.1;  // exercises the advance rng
  const auto st = make_cloud(flow, Support::disk(Vec2(0.0, 0.075), 0.012), 3.0, 77);

  const auto iq1 = synthesize_ensemble(st, geo, params, default_psf(params), 15.0, 123);
  const auto iq2 = synthesize_ensemble(st, geo, params, default_psf(params), 15.0, 123);
  const auto iq3 = synthesize_ensemble(st, geo, params, default_psf(params), 15.0, 124);
  double same = 0.0, other = 0.0;
  for (int k = 0; k < 3; ++k) {
    same = std::max(same, (iq1.frames[k] - iq2.frames[k]).abs().maxCoeff());
    other = std::max(other, (iq1.frames[k] - iq3.frames[k]).abs().maxCoeff());
  }
  CHECK(same == 0.0);
  CHECK(other > 0.0);
}

TEST_CASE("psf truncation at 6 sigma is numerically converged") {
  ToneSetup setup(0.25, 6000.0, 2, 99);
  const PsfModel psf6 = default_psf(setup.params);
  PsfModel psf9 = psf6;
  psf9.cutoff_sigmas = 9.0;
  const auto a = synthesize_ensemble(setup.state, setup.geo, setup.params, psf6, std::nullopt, 1);
  const auto b = synthesize_ensemble(setup.state, setup.geo, setup.params, psf9, std::nullopt, 1);
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 2; ++k) {
    num += (a.frames[k] - b.frames[k]).abs2().sum();
    den += b.frames[k].abs2().sum();
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("noise hits the requested snr against the region power") {
  AcquisitionParams params;
  params.packet_size = 8;
  const auto geo = ScanGeometry::symmetric(0.06, 0.10, 0.5, 40, 30);
  IQEnsemble iq;
  iq.params = params;
  iq.geometry = geo;
  iq.frames.assign(8, ComplexField::Constant(40, 30, Complex(1.0, 0.0)));
  const IQEnsemble clean = iq;
  const RoiMask roi = MaskField::Constant(40, 30, true);

  doppler::acquire::add_noise(iq, 10.0, roi, 2024);
  double noise_power = 0.0;
  for (int k = 0; k < 8; ++k) noise_power += (iq.frames[k] - clean.frames[k]).abs2().sum();
  noise_power /= 8.0 * 40.0 * 30.0;
  const double measured_snr_db = -10.0 * std::log10(noise_power);  // signal power is 1
  CHECK(measured_snr_db == doctest::Approx(10.0).epsilon(0.05));

  SUBCASE("deterministic per seed") {
    IQEnsemble again = clean;
    doppler::acquire::add_noise(again, 10.0, roi, 2024);
    double diff = 0.0;
    for (int k = 0; k < 8; ++k) diff += (again.frames[k] - iq.frames[k]).abs().maxCoeff();
    CHECK(diff == 0.0);
  }
  SUBCASE("empty region rejected") {
    IQEnsemble again = clean;
    const RoiMask empty = MaskField::Constant(40, 30, false);
    CHECK_THROWS_AS(doppler::acquire::add_noise(again, 10.0, empty, 1), DataError);
  }
  SUBCASE("zero-power region rejected") {
    IQEnsemble zeros = clean;
    for (auto& f : zeros.frames) f.setZero();
    CHECK_THROWS_AS(doppler::acquire::add_noise(zeros, 10.0, roi, 1), DataError);
  }
}

TEST_CASE("empty phantom is rejected") {
  PhantomState st;
  st.flow = FlowField::uniform(Vec2::Zero());
  st.support = Support::disk(Vec2(0, 0.05), 0.01);
  AcquisitionParams params;
  const auto geo = ScanGeometry::symmetric(0.04, 0.06, 0.3, 8, 3);
  CHECK_THROWS_AS(synthesize_ensemble(st, geo, params, default_psf(params), std::nullopt, 1),
                  DataError);
}

TEST_CASE("full-size ensemble renders in interactive time" * doctest::skip(false)) {
  AcquisitionParams params;
  params.packet_size = 8;
  const auto geo = ScanGeometry::symmetric(0.10, 0.17, 1.2217304763960306, 180, 40);
  const auto support = Support::sector(0.09, 0.18, -0.75, 0.75);
  const auto st = make_cloud(FlowField::rigid_rotation(Vec2(0.0, 0.135), 10.0, 0.03), support,
                             1.65, 2); // ~50k scatterers over the sector
  REQUIRE(st.scatterers.size() > 30000);

  const auto t0 = std::chrono::steady_clock::now();
  const auto iq = synthesize_ensemble(st, geo, params, default_psf(params), 20.0, 3);
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(max_abs(iq) > 0.0);
  CHECK(dt < 8.0);
  MESSAGE("180x40x8 from ", st.scatterers.size(), " scatterers in ", dt, " s");
}
