#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "npupg/chip_model.hpp"

using namespace npupg;

TEST_CASE("bundled presets carry the documented machine parameters") {
  auto d = chip_preset("npu-d");
  CHECK(d.chip.frequency_hz == doctest::Approx(1.75e9));
  CHECK(d.chip.sa_width == 128);
  CHECK(d.chip.num_sa == 8);
  CHECK(d.chip.num_vu == 6);
  CHECK(d.chip.sram_bytes == 128ull * 1024 * 1024);
  CHECK(d.chip.num_segments() == 32768);
  CHECK(d.chip.hbm_bandwidth_bps == doctest::Approx(2765e9));
  CHECK(d.chip.hbm_capacity_bytes == 95ull * 1024 * 1024 * 1024);
  CHECK(d.chip.ici_links == 6);
  CHECK(d.chip.ici_link_bandwidth_bps == doctest::Approx(100e9));
  CHECK(d.chip.ici_topology == "3d-torus");
  CHECK(d.chip.vu_elems_per_cycle() == 1024);

  auto a = chip_preset("npu-a");
  CHECK(a.chip.frequency_hz == doctest::Approx(700e6));
  CHECK(a.chip.num_sa == 2);
  CHECK(a.chip.num_vu == 4);
  CHECK(a.chip.sram_bytes == 32ull * 1024 * 1024);
  CHECK(a.chip.ici_links == 4);
  CHECK(a.chip.ici_topology == "2d-torus");

  auto e = chip_preset("npu-e");
  CHECK(e.chip.sa_width == 256);
  CHECK(e.chip.num_vu == 8);
  CHECK(e.chip.sram_bytes == 256ull * 1024 * 1024);
  CHECK(e.chip.hbm_bandwidth_bps == doctest::Approx(7400e9));

  CHECK(chip_preset_names().size() == 5);
  CHECK_THROWS_AS(chip_preset("npu-z"), ConfigError);
}

TEST_CASE("gating delay and break-even defaults") {
  auto b = chip_preset("npu-d");
  const auto& p = b.power;
  CHECK(p.delay_cycles[size_t(GateKind::SaPe)] == 1);
  CHECK(p.delay_cycles[size_t(GateKind::SaFull)] == 10);
  CHECK(p.delay_cycles[size_t(GateKind::Vu)] == 2);
  CHECK(p.delay_cycles[size_t(GateKind::Hbm)] == 60);
  CHECK(p.delay_cycles[size_t(GateKind::Ici)] == 60);
  CHECK(p.delay_cycles[size_t(GateKind::SramSleep)] == 4);
  CHECK(p.delay_cycles[size_t(GateKind::SramOff)] == 10);
  CHECK(p.bet_cycles[size_t(GateKind::SaPe)] == 47);
  CHECK(p.bet_cycles[size_t(GateKind::SaFull)] == 469);
  CHECK(p.bet_cycles[size_t(GateKind::Vu)] == 32);
  CHECK(p.bet_cycles[size_t(GateKind::Hbm)] == 412);
  CHECK(p.bet_cycles[size_t(GateKind::Ici)] == 459);
  CHECK(p.bet_cycles[size_t(GateKind::SramSleep)] == 41);
  CHECK(p.bet_cycles[size_t(GateKind::SramOff)] == 82);
  CHECK(p.leak_logic_off == doctest::Approx(0.03));
  CHECK(p.leak_sram_sleep == doctest::Approx(0.25));
  CHECK(p.leak_sram_off == doctest::Approx(0.002));
  CHECK(b.fleet.duty_cycle == doctest::Approx(0.60));
  CHECK(b.fleet.pue == doctest::Approx(1.1));
}

TEST_CASE("transition energy closure") {
  // 1 W unit, 3% gated leakage, break-even 32 cycles at 1 GHz: 31.04 nJ.
  ChipBundle b = chip_preset("npu-d");
  b.chip.frequency_hz = 1e9;
  b.power.vu_static_w = 1.0;
  b.power.leak_logic_off = 0.03;
  b.power.bet_cycles[size_t(GateKind::Vu)] = 32;
  CHECK(transition_energy(b, GateKind::Vu) == doctest::Approx(31.04e-9).epsilon(1e-12));

  // Gating for exactly BET cycles breaks even: bet * (on - gated) == E_trans
  // identically, and the switching remainder is non-negative for every kind.
  for (size_t i = 0; i < kNumGateKinds; i++) {
    GateKind k = GateKind(i);
    double p_on = instance_static_w(b, k);
    double p_gated = p_on * b.power.gated_ratio(k);
    double saved = double(b.power.bet_cycles[i]) * (p_on - p_gated) / b.chip.frequency_hz;
    CHECK(transition_energy(b, k) == doctest::Approx(saved).epsilon(1e-12));
    CHECK(switching_energy(b, k) >= 0.0);
    double markup = 2.0 * b.power.delay_cycles[i] * (p_on - p_gated) / b.chip.frequency_hz;
    CHECK(switching_energy(b, k) + markup ==
          doctest::Approx(transition_energy(b, k)).epsilon(1e-12));
  }
}

TEST_CASE("per-instance static powers") {
  auto b = chip_preset("npu-d");
  CHECK(instance_static_w(b, GateKind::SaFull) == doctest::Approx(b.power.sa_static_w));
  CHECK(instance_static_w(b, GateKind::SaPe) ==
        doctest::Approx(b.power.sa_static_w / (128.0 * 128.0)));
  CHECK(instance_static_w(b, GateKind::SramOff) ==
        doctest::Approx(b.power.sram_static_w / 32768.0));
}

TEST_CASE("validation rejects broken configs") {
  auto ok = chip_preset("npu-d");
  CHECK_NOTHROW(validate(ok));

  auto b = ok;
  b.power.bet_cycles[size_t(GateKind::Vu)] = 4;  // not > 2 * delay(2)
  CHECK_THROWS_WITH_AS(validate(b), doctest::Contains("break-even"), SimError);

  b = ok;
  b.chip.sa_width = 96;
  CHECK_THROWS_WITH_AS(validate(b), doctest::Contains("power of two"), SimError);

  b = ok;
  b.chip.sram_bytes = 4097;
  CHECK_THROWS_AS(validate(b), SimError);

  b = ok;
  b.fleet.duty_cycle = 0.0;
  CHECK_THROWS_AS(validate(b), SimError);

  b = ok;
  b.power.leak_sram_off = 0.5;  // above sleep leakage
  CHECK_THROWS_AS(validate(b), SimError);
}

TEST_CASE("toml round trip preserves every preset") {
  for (const auto& name : chip_preset_names()) {
    auto b = chip_preset(name);
    auto r = parse_chip_config(chip_to_toml(b), "roundtrip");
    CHECK(r.chip.name == b.chip.name);
    CHECK(r.chip.frequency_hz == doctest::Approx(b.chip.frequency_hz));
    CHECK(r.chip.sa_width == b.chip.sa_width);
    CHECK(r.chip.num_sa == b.chip.num_sa);
    CHECK(r.chip.num_vu == b.chip.num_vu);
    CHECK(r.chip.sram_bytes == b.chip.sram_bytes);
    CHECK(r.chip.hbm_bandwidth_bps == doctest::Approx(b.chip.hbm_bandwidth_bps));
    CHECK(r.chip.hbm_latency_cycles == b.chip.hbm_latency_cycles);
    CHECK(r.chip.ici_links == b.chip.ici_links);
    CHECK(r.chip.dma_queue_depth == b.chip.dma_queue_depth);
    CHECK(r.power.sa_static_w == doctest::Approx(b.power.sa_static_w));
    CHECK(r.power.uncore_static_w == doctest::Approx(b.power.uncore_static_w));
    CHECK(r.power.sa_mac_j == doctest::Approx(b.power.sa_mac_j));
    CHECK(r.power.setpm_issue_j == doctest::Approx(b.power.setpm_issue_j));
    CHECK(r.power.delay_cycles == b.power.delay_cycles);
    CHECK(r.power.bet_cycles == b.power.bet_cycles);
    CHECK(r.power.leak_sram_off == doctest::Approx(b.power.leak_sram_off));
    CHECK(r.fleet.duty_cycle == doctest::Approx(b.fleet.duty_cycle));
  }
}

TEST_CASE("minimal config file gets defaults filled") {
  const char* text =
      "[chip]\n"
      "name = \"mini\"\n"
      "frequency_mhz = 1000\n"
      "sa_width = 64\n"
      "num_sa = 1\n"
      "num_vu = 2\n"
      "sram_mib = 1\n"
      "hbm_bandwidth_gbps = 100\n"
      "hbm_capacity_gib = 8\n"
      "ici_links = 1\n"
      "ici_link_bandwidth_gbps = 10\n";
  auto b = parse_chip_config(text, "mini");
  CHECK(b.chip.vu_lanes == 8);
  CHECK(b.chip.vu_sublanes == 128);
  CHECK(b.chip.sram_segment_bytes == 4096);
  CHECK(b.chip.hbm_latency_cycles == 500);
  CHECK(b.chip.dma_queue_depth == 16);
  CHECK(b.power.leak_logic_off == doctest::Approx(0.03));
  CHECK(b.power.bet_cycles[size_t(GateKind::Vu)] == 32);
  CHECK(b.fleet.pue == doctest::Approx(1.1));
}

TEST_CASE("missing chip section is a config error") {
  CHECK_THROWS_AS(parse_chip_config("[power]\nsa_static_w = 1\n", "x"), ConfigError);
}

TEST_CASE("gate kind names parse") {
  GateKind k;
  CHECK(parse_gate_kind("vu", &k));
  CHECK(k == GateKind::Vu);
  CHECK(parse_gate_kind("sram-off", &k));
  CHECK(k == GateKind::SramOff);
  CHECK(parse_gate_kind("sa-pe", &k));
  CHECK(!parse_gate_kind("turbo", &k));
}
