#include "fdo/config.hpp"
#include "fdo/io.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace fdo;

TEST(LevelLabel, RoundTrip) {
    for (const auto& l : haar_levels(64)) EXPECT_EQ(parse_level_label(level_label(l)), l);
    EXPECT_EQ(parse_level_label("pc12"), LevelId(PcRank{12}));
    for (const char* bad : {"pc0", "w2.4", "w.1", "x", "w1", "pc", "w-1.0"}) EXPECT_THROW(parse_level_label(bad), FormatError) << bad;
}

TEST(FeatureFiles, HaarRoundTrip) {
    const auto dir = testutil::scratch("io_haar");
    const auto fm = haar_project(CurveSet(testutil::gaussian_matrix(5, 8, 1)));
    save_feature_matrix(fm, (dir / "f.csv").string(), (dir / "f.json").string());
    const auto back = load_feature_matrix((dir / "f.csv").string(), (dir / "f.json").string());
    EXPECT_TRUE((back.coeffs.array() == fm.coeffs.array()).all());
    EXPECT_EQ(back.level_index, fm.level_index);
    EXPECT_EQ(back.source_rows, fm.source_rows);
    EXPECT_EQ(back.basis_kind, BasisKind::Haar);
    EXPECT_EQ(testutil::slurp(dir / "f.csv").substr(0, 17), "scaling,w0.0,w1.0");
}

TEST(FeatureFiles, PcaRoundTripWithSidecar) {
    const auto dir = testutil::scratch("io_pca");
    const auto x = testutil::gaussian_matrix(21, 8, 2);
    const CurveSet c(x);
    IndexList nom;
    for (Index i = 0; i < 20; ++i) nom.push_back(i);
    const auto split = make_split(21, nom);
    const auto basis = pca_fit(c, split);
    const auto fm = pca_project(c, basis, {0, 2, 20});
    save_feature_matrix(fm, (dir / "f.csv").string(), (dir / "f.json").string(), &basis);
    const auto back = load_feature_matrix((dir / "f.csv").string(), (dir / "f.json").string());
    EXPECT_EQ(back.basis_kind, BasisKind::PCA);
    EXPECT_EQ(back.source_rows, (IndexList{0, 2, 20}));
    EXPECT_TRUE((back.coeffs.array() == fm.coeffs.array()).all());
    const auto side = json::parse(testutil::slurp(dir / "f.json"));
    EXPECT_EQ(side["fit_indices"].size(), 10u);
    EXPECT_EQ(side["eigenvalues"].size(), basis.size());

    save_pca_basis(basis, (dir / "b.csv").string(), (dir / "b.json").string());
    std::ifstream in(dir / "b.csv");
    std::vector<std::string> header;
    const auto m = read_numeric_csv(in, true, &header);
    EXPECT_EQ(header.front(), "mean");
    EXPECT_EQ(header[1], "pc1");
    EXPECT_EQ(m.rows(), 8);
    EXPECT_EQ(m.col(1), basis.components.col(0));
}

TEST(FeatureFiles, MismatchedSidecar) {
    const auto dir = testutil::scratch("io_bad");
    const auto fm = haar_project(CurveSet(testutil::gaussian_matrix(3, 4, 1)));
    save_feature_matrix(fm, (dir / "f.csv").string(), (dir / "f.json").string());
    testutil::write_file(dir / "g.json", R"({"basis":"haar","levels":["scaling","w0.0"],"source_rows":[0,1,2]})");
    EXPECT_THROW(load_feature_matrix((dir / "f.csv").string(), (dir / "g.json").string()), FormatError);
    testutil::write_file(dir / "h.json", R"({"basis":"haar","levels":["scaling","w1.0","w0.0","w1.1"],"source_rows":[0,1,2]})");
    EXPECT_THROW(load_feature_matrix((dir / "f.csv").string(), (dir / "h.json").string()), FormatError);
    testutil::write_file(dir / "i.json", "{");
    EXPECT_THROW(load_feature_matrix((dir / "f.csv").string(), (dir / "i.json").string()), FormatError);
}

TEST(SelectionFiles, CsvAndJson) {
    const auto r = benjamini_hochberg({0.001, 0.013, 0.04, 0.3, 0.9}, 0.05);
    std::vector<LevelId> ids;
    for (int i = 1; i <= 5; ++i) ids.emplace_back(PcRank{i});
    std::ostringstream csv;
    write_selection_csv(csv, r, ids);
    EXPECT_EQ(csv.str(), "level_id,p_value,rejected\npc1,0.001,1\npc2,0.012999999999999999,1\npc3,0.040000000000000001,0\npc4,0.29999999999999999,0\npc5,0.90000000000000002,0\n");
    const auto j = selection_json(r, ids);
    EXPECT_EQ(j["k_star"], 2);
    EXPECT_EQ(j["levels"][1]["level_id"], "pc2");
    EXPECT_EQ(j["levels"][1]["rejected"], true);
    EXPECT_THROW(selection_json(r, {ids[0]}), InvalidArgument);
}

TEST(LofFiles, InfiniteDensityIsSpelledOut) {
    Eigen::MatrixXd pts(4, 1);
    pts << 0, 0, 0, 3;
    const auto ps = make_point_set(pts);
    const auto s = lof_scores(ps, 2);
    std::ostringstream csv;
    write_lof_csv(csv, s, ps.ids);
    EXPECT_NE(csv.str().find(",inf\n"), std::string::npos);
    const auto j = lof_json(s, ps.ids, {2.0});
    EXPECT_TRUE(j["points"][0]["lrd"].is_null());
    EXPECT_EQ(j["flagged"][0]["ids"], json::array({"3"}));
}

TEST(TruthFiles, RoundTrip) {
    TelemetryConfig cfg;
    std::ostringstream out;
    write_truth_csv(out, cfg);
    std::istringstream in(out.str());
    EXPECT_EQ(read_truth_csv(in), (std::vector<Index>{5, 25, 69, 97, 133, 155, 200, 219}));
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "day_index,day_number,kind,magnitude,start");

    std::istringstream plain("3\n1\n1\n");
    EXPECT_EQ(read_truth_csv(plain), (std::vector<Index>{1, 3}));
    std::istringstream bad("day\n3\nx\n");
    EXPECT_THROW(read_truth_csv(bad), ParseError);
}

TEST(ReportJson, CarriesBothDayIndexings) {
    TelemetryConfig cfg;
    cfg.seed = 2;
    const auto tm = generate_telemetry(cfg);
    IndexList nom;
    for (Index i = 240; i < 480; ++i) nom.push_back(i);
    const auto split = make_split(480, nom);
    PipelineOptions opt;
    opt.sets = {4};
    const auto rep = run_pipeline(tm.curves, split, tm.ground_truth, opt, default_bridge_tables());
    const auto j = pipeline_report_json(rep, tm.curves, split, json::object());
    EXPECT_EQ(j["tool"], kToolName);
    EXPECT_EQ(j["ground_truth"][0]["day_index"], 5);
    EXPECT_EQ(j["ground_truth"][0]["day_number"], 6);
    EXPECT_EQ(j["feature_sets"][0]["n_features"], 8);
    EXPECT_EQ(j["feature_sets"][0]["features"].size(), 8u);
    EXPECT_EQ(j["run"]["samples_per_curve"], 256);

    std::ostringstream csv;
    write_pipeline_scores_csv(csv, rep, tm.curves);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "set_id,set_name,day_index,day_id,lof,is_truth");
    int rows = 0, truth_rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        if (line.back() == '1') ++truth_rows;
    }
    EXPECT_EQ(rows, 240);
    EXPECT_EQ(truth_rows, 8);
}

TEST(StudyFiles, Headers) {
    StudyConfig c;
    std::ostringstream a, b, f;
    write_level_csv(a, c, {{TestKind::W2, LevelEstimate{0.05, 0.003, 5000}}});
    EXPECT_EQ(a.str(), "distribution,test,n,m,alpha,alpha_hat,se\ngaussian,w2,1000,5000,0.050000000000000003,0.050000000000000003,0.0030000000000000001\n");
    write_roc_csv(b, {});
    EXPECT_EQ(b.str(), "test,alpha,fpr,tpr\n");
    write_fdr_csv(f, fdr_null_study(4, 2, 0.05, 1));
    EXPECT_EQ(f.str().substr(0, 21), "replication,u,v,r,fdp");
}

TEST(Config, ParseAndTypes) {
    std::istringstream in("# study\nalpha = 0.1\n\nseed=7  # trailing\nfdr_control = no\nname = hello world\n");
    const auto kv = KeyValueConfig::parse(in);
    EXPECT_EQ(kv.get_as<double>("alpha"), 0.1);
    EXPECT_EQ(kv.get_as<std::uint64_t>("seed"), 7u);
    EXPECT_EQ(kv.get_as<bool>("fdr_control"), false);
    EXPECT_EQ(kv.get("name"), "hello world");
    EXPECT_FALSE(kv.get("missing").has_value());
    EXPECT_TRUE(kv.unused_keys().empty());
}

TEST(Config, Errors) {
    std::istringstream dup("a = 1\na = 2\n");
    EXPECT_THROW(KeyValueConfig::parse(dup), ConfigError);
    std::istringstream noeq("just text\n");
    EXPECT_THROW(KeyValueConfig::parse(noeq), ConfigError);
    std::istringstream bad("seed = seven\nflag = maybe\n");
    const auto kv = KeyValueConfig::parse(bad);
    EXPECT_THROW(kv.get_as<std::uint64_t>("seed"), ConfigError);
    EXPECT_THROW(kv.get_as<bool>("flag"), ConfigError);
    EXPECT_THROW(KeyValueConfig::load("/nonexistent.cfg"), ConfigError);
}

TEST(Config, AppliesToEveryConfigType) {
    std::istringstream in(
        "n_days = 100\nnoise_sd = 0.1\nanomalies = 3:local_spike:2:0.25; 7:double_period:1\n"
        "group_size = 50\ndistribution = exponential\nrate = 2\n"
        "sets = 2,7\nthresholds = 1.5, 3\nlof_k = 5\nstandardize = true\ntypo_key = 1\n");
    const auto kv = KeyValueConfig::parse(in);
    TelemetryConfig t;
    apply(kv, t);
    EXPECT_EQ(t.n_days, 100u);
    EXPECT_EQ(t.noise_sd, 0.1);
    ASSERT_EQ(t.anomaly_specs.size(), 2u);
    EXPECT_EQ(t.anomaly_specs[0].kind, AnomalyKind::LocalSpike);
    EXPECT_EQ(t.anomaly_specs[0].start, 0.25);
    EXPECT_EQ(t.anomaly_specs[1].day, 7u);
    StudyConfig s;
    apply(kv, s);
    EXPECT_EQ(s.group_size, 50u);
    EXPECT_EQ(s.distribution, Distribution::Exponential);
    EXPECT_EQ(s.rate, 2.0);
    PipelineOptions o;
    apply(kv, o);
    EXPECT_EQ(o.sets, (std::vector<int>{2, 7}));
    EXPECT_EQ(o.thresholds, (std::vector<double>{1.5, 3.0}));
    EXPECT_EQ(o.lof_k, 5u);
    EXPECT_TRUE(o.standardize);
    EXPECT_EQ(kv.unused_keys(), (std::vector<std::string>{"typo_key"}));
}

TEST(Config, AnomalyList) {
    EXPECT_EQ(parse_anomaly_list("default").size(), 8u);
    EXPECT_TRUE(parse_anomaly_list("none").empty());
    EXPECT_THROW(parse_anomaly_list("3:bogus:1"), ConfigError);
    EXPECT_THROW(parse_anomaly_list("3:local_spike"), ConfigError);
    EXPECT_THROW(parse_anomaly_list("3:local_spike:x"), ConfigError);
}
