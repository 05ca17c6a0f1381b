#include "phaseret/errors.hpp"
#include "phaseret/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace phaseret;

TEST(IoJson, EnsembleRoundTripIsExact) {
  const MeasurementEnsemble ens = masked_fourier_ensemble(4, 3, 11);
  const Json j = to_json(ens);
  EXPECT_EQ(j.at("kind"), "masked_fourier");
  EXPECT_EQ(j.at("seed"), 11u);
  EXPECT_EQ(j.at("columns").at("layout"), "column-major");
  // Column-major: entry k is (k % n, k / n).
  EXPECT_EQ(j.at("columns").at("data")[5][0].get<double>(), ens.columns()(1, 1).real());
  const MeasurementEnsemble back = ensemble_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.columns(), ens.columns());
  EXPECT_EQ(back.kind(), ens.kind());
  EXPECT_EQ(back.seed(), ens.seed());
}

TEST(IoJson, RejectsMalformedInput) {
  Json j = to_json(gaussian_ensemble(3, 5, 1));
  j["columns"]["rows"] = 4;
  EXPECT_THROW(ensemble_from_json(j), std::invalid_argument);
  j = to_json(gaussian_ensemble(3, 5, 1));
  j["n"] = 4;
  EXPECT_THROW(ensemble_from_json(j), DimensionMismatch);
  EXPECT_THROW(cvector_from_json(Json::parse("[[1, 2, 3]]")), std::invalid_argument);
  EXPECT_THROW(signal_from_json(Json{{"values", Json::array()}}), std::invalid_argument);
}

TEST(IoJson, InstanceRoundTripKeepsTruthAndHarmonic) {
  HarmonicModel model{RVector{{-0.3, 0.4}}, CVector::Ones(2), 6};
  const ComplexSignal x = harmonic_signal(model);
  const MeasurementEnsemble ens = gaussian_ensemble(6, 20, 2);
  InstanceFile file{RetrievalInstance{ens, add_noise(measure(ens, x), 0.1, 3), 0.1, x}, 20.0, model};
  const InstanceFile back = instance_from_json(Json::parse(to_json(file).dump()));
  EXPECT_EQ(back.instance.y, file.instance.y);
  EXPECT_EQ(back.instance.sigma_n, 0.1);
  ASSERT_TRUE(back.instance.truth);
  EXPECT_EQ(back.instance.truth->values(), x.values());
  ASSERT_TRUE(back.harmonic);
  EXPECT_EQ(back.harmonic->frequencies, model.frequencies);
  EXPECT_EQ(*back.snr_db, 20.0);

  Json j = to_json(file);
  j["y"].erase(0);
  EXPECT_THROW(instance_from_json(j), DimensionMismatch);
}

TEST(IoJson, FimResultCarriesEigenvalues) {
  const MeasurementEnsemble ens = gaussian_ensemble(4, 16, 5);
  const FimResult f = fim_amp_phase(ens, reference_signal(4), 0.5);
  const Json j = to_json(f);
  EXPECT_EQ(j.at("parametrization"), "amp-phase");
  EXPECT_EQ(j.at("rank"), 7);
  EXPECT_EQ(rvector_from_json(j.at("eigenvalues")), f.eigenvalues);
  EXPECT_EQ(rmatrix_from_json(j.at("crb")), f.crb);
  EXPECT_TRUE(j.contains("crb_theta"));
  EXPECT_DOUBLE_EQ(j.at("crb_trace_db").get<double>(), to_db(f.trace()));
}

TEST(IoJson, ConfigOverlayTouchesOnlyGivenKeys) {
  FppConfig c;
  update_from_json(c, Json{{"lambda", 3.0}, {"inner", {{"feastol", 1e-10}}}, {"epsilon", 0.2}});
  EXPECT_EQ(c.lambda, 3.0);
  EXPECT_EQ(c.inner.feastol, 1e-10);
  EXPECT_EQ(c.inner.abstol, FppConfig{}.inner.abstol);
  EXPECT_EQ(*c.epsilon, 0.2);
  update_from_json(c, Json{{"epsilon", nullptr}});
  EXPECT_FALSE(c.epsilon);
  EXPECT_THROW(update_from_json(c, Json{{"lamda", 1.0}}), std::invalid_argument);

  BaselineConfig b;
  update_from_json(b, Json{{"mu_max", 0.1}, {"init", "random"}});
  EXPECT_EQ(b.schedule.mu_max, 0.1);
  EXPECT_EQ(b.init, InitKind::random);
  FppConfig round;
  update_from_json(round, to_json(c));
  EXPECT_EQ(to_json(round), to_json(c));
}

TEST(IoFiles, MissingFileIsAnIoError) {
  EXPECT_THROW(read_json_file("/nonexistent/phaseret/instance.json"), IoError);
  const auto dir = std::filesystem::temp_directory_path() / "phaseret_test_io";
  std::filesystem::remove_all(dir);
  write_json_file(dir / "nested" / "a.json", Json{{"k", 1}});
  EXPECT_EQ(read_json_file(dir / "nested" / "a.json").at("k"), 1);
  write_text_file(dir / "bad.json", "{not json");
  EXPECT_THROW(read_json_file(dir / "bad.json"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
