#include "lawnav/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lawnav;
namespace fs = std::filesystem;

namespace
{

struct CliRun
{
    int code;
    std::string out, err;
};

CliRun lawsim(std::vector<std::string> args)
{
    args.insert(args.begin(), "lawsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test
{
  protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() / ("lawsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        data = (dir / "data.jsonl").string();
    }
    void TearDown() override { fs::remove_all(dir); }

    // a handful of episodes so every command runs in well under a second
    CliRun small_gen(const std::string& seed = "3")
    {
        return lawsim({"gen", "--out", data, "--seed", seed, "--set", "seen_maps=2", "--set", "unseen_maps=1", "--set",
                       "train_episodes=6", "--set", "val_seen_episodes=0", "--set", "val_unseen_episodes=4"});
    }

    fs::path dir;
    std::string data;
};

} // namespace

TEST_F(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(lawsim({}).code, kExitConfig);
    EXPECT_EQ(lawsim({"fly"}).code, kExitConfig);
    EXPECT_EQ(lawsim({"gen"}).code, kExitConfig); // --out missing
    const auto bad_key = lawsim({"gen", "--out", data, "--set", "no_such_key=1"});
    EXPECT_EQ(bad_key.code, kExitConfig);
    EXPECT_NE(bad_key.err.find("no_such_key"), std::string::npos);
    EXPECT_EQ(lawsim({"gen", "--out", data, "--set", "seen_maps=two"}).code, kExitConfig);
    EXPECT_EQ(lawsim({"gen", "--out", data, "--set", "low_divergence_fraction=1.5"}).code, kExitConfig);
    ASSERT_EQ(small_gen().code, kExitOk);
    EXPECT_EQ(lawsim({"train", "--dataset", data, "--mode", "law-sideways", "--out", (dir / "t").string()}).code, kExitConfig);
    EXPECT_EQ(lawsim({"eval", "--dataset", data, "--out", (dir / "e").string()}).code, kExitConfig);
    EXPECT_EQ(lawsim({"--help"}).code, kExitOk);
}

TEST_F(Cli, MalformedInputExitsOne)
{
    EXPECT_EQ(lawsim({"audit", "--dataset", (dir / "missing.jsonl").string()}).code, kExitMalformed);
    ASSERT_EQ(small_gen().code, kExitOk);
    auto text = slurp(data);
    {
        std::ofstream f(data);
        f << text.substr(0, text.size() / 2);
    }
    const auto r = lawsim({"audit", "--dataset", data});
    EXPECT_EQ(r.code, kExitMalformed);
    EXPECT_NE(r.err.find(data + ":"), std::string::npos);
    const auto bad_ckpt = (dir / "ckpt.json").string();
    {
        std::ofstream f(bad_ckpt);
        f << "{\"format\": \"nope\"}";
    }
    ASSERT_EQ(small_gen().code, kExitOk);
    EXPECT_EQ(lawsim({"eval", "--dataset", data, "--checkpoint", bad_ckpt, "--out", (dir / "e").string()}).code, kExitMalformed);
}

TEST_F(Cli, ConfigFileAndFlags)
{
    const auto cfg = (dir / "run.cfg").string();
    {
        std::ofstream f(cfg);
        f << "# tiny\nseen_maps = 2\nunseen_maps = 1\ntrain_episodes = 4 # inline comment\nval_seen_episodes = 0\n"
             "val_unseen_episodes = 2\n";
    }
    ASSERT_EQ(lawsim({"gen", "--config", cfg, "--out", data}).code, kExitOk);
    EXPECT_EQ(load_dataset(data).episodes.size(), 6u);
    {
        std::ofstream f(cfg, std::ios::app);
        f << "this line is wrong\n";
    }
    const auto r = lawsim({"gen", "--config", cfg, "--out", data});
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_NE(r.err.find(cfg + ":7"), std::string::npos);

    RunConfig c;
    for (const auto& k : config_keys()) {
        // every key reads back what it writes
        RunConfig copy = c;
        EXPECT_NO_THROW(set_config_value(copy, k.name, k.get(c))) << k.name;
        EXPECT_EQ(k.get(copy), k.get(c)) << k.name;
    }
}

TEST_F(Cli, ModeNames)
{
    EXPECT_EQ(parse_mode("goal"), SupervisionMode::goal());
    EXPECT_EQ(parse_mode("law-pano"), SupervisionMode::law(PathKind::pano()));
    EXPECT_EQ(parse_mode("law-step"), SupervisionMode::law(PathKind::step()));
    EXPECT_EQ(parse_mode("law-4"), SupervisionMode::law(PathKind::resampled(4)));
    EXPECT_EQ(parse_mode("law-k 15"), SupervisionMode::law(PathKind::resampled(15)));
    EXPECT_EQ(parse_mode("mixed-sum"), SupervisionMode::mixed_sum());
    EXPECT_EQ(parse_mode("mixed-random"), SupervisionMode::mixed_random(0.5));
    EXPECT_EQ(parse_mode("mixed-random 0.25"), SupervisionMode::mixed_random(0.25));
    EXPECT_THROW(parse_mode("law-0"), ConfigError);
    EXPECT_THROW(parse_mode("mixed-random 2"), ConfigError);
}

TEST_F(Cli, ScoreReferenceIsPerfect)
{
    ASSERT_EQ(small_gen().code, kExitOk);
    const auto ds = load_dataset(data);
    std::vector<TrajectoryLog> logs;
    for (const auto& ep : ds.episodes) {
        Trajectory t;
        for (const Point& p : densify_to_steps(ds.map_for(ep), ep.pano).points) t.poses.push_back({p.x, p.y, 0.0});
        t.actions.assign(t.poses.size() - 1, ActionType::Forward);
        t.actions.push_back(ActionType::Stop);
        t.stopped = true;
        logs.push_back({ep.id, t});
    }
    const auto log_path = (dir / "ref.jsonl").string();
    {
        auto f = open_output(log_path);
        write_trajectories(f, logs);
    }
    ASSERT_EQ(lawsim({"score", "--dataset", data, "--trajectories", log_path, "--out", (dir / "s").string()}).code, kExitOk);
    auto in = open_input((dir / "s" / "metrics.jsonl").string());
    const auto reps = read_reports(in);
    ASSERT_EQ(reps.size(), ds.episodes.size());
    for (const auto& r : reps) {
        EXPECT_EQ(r.ndtw, 1.0) << r.episode_id;
        EXPECT_EQ(r.wa_05, 1.0) << r.episode_id;
        EXPECT_EQ(r.sr, 1.0) << r.episode_id;
    }
    {
        std::ofstream f(log_path, std::ios::app);
        f << "{\"episode_id\":\"ghost\",\"poses\":[[1,1,0]],\"actions\":[]}\n";
    }
    const auto bad = lawsim({"score", "--dataset", data, "--trajectories", log_path, "--out", (dir / "s").string()});
    EXPECT_EQ(bad.code, kExitMalformed);
    EXPECT_NE(bad.err.find("ghost"), std::string::npos);
}

TEST_F(Cli, EvalScoreAnalyzeAgree)
{
    ASSERT_EQ(small_gen().code, kExitOk);
    const auto e = (dir / "e").string(), s = (dir / "s").string(), a = (dir / "a").string();
    ASSERT_EQ(lawsim({"eval", "--dataset", data, "--oracle", "law-step", "--set", "eval_split=all", "--out", e}).code, kExitOk);
    ASSERT_EQ(lawsim({"score", "--dataset", data, "--trajectories", e + "/trajectories.jsonl", "--out", s}).code, kExitOk);
    EXPECT_EQ(slurp(e + "/metrics.jsonl"), slurp(s + "/metrics.jsonl"));
    for (const char* f : {"summary.md", "summary.csv", "summary.json"}) EXPECT_TRUE(fs::exists(fs::path(e) / f)) << f;

    const auto r = lawsim({"analyze", "--metrics", e + "/metrics.jsonl", "--bins", "0,0.5,1", "--dataset", data,
                           "--trajectories", e + "/trajectories.jsonl", "--out", a});
    ASSERT_EQ(r.code, kExitOk);
    const auto bins = slurp(a + "/bins.csv");
    EXPECT_EQ(bins.rfind("bin_lo,bin_hi,n,ndtw_mean,ndtw_ci,wa_mean,wa_ci\n", 0), 0u);
    EXPECT_EQ(std::count(bins.begin(), bins.end(), '\n'), 3);
    EXPECT_NE(r.out.find("sub-instructions followed:"), std::string::npos);
    EXPECT_TRUE(fs::exists(fs::path(a) / "sub_instructions.csv"));
    EXPECT_EQ(lawsim({"analyze", "--metrics", e + "/metrics.jsonl", "--bins", "0,1,0.5", "--out", a}).code, kExitConfig);
}

TEST_F(Cli, AuditFraction)
{
    ASSERT_EQ(lawsim({"gen", "--out", data, "--set", "seen_maps=2", "--set", "unseen_maps=1", "--set", "train_episodes=50",
                      "--set", "val_seen_episodes=0", "--set", "val_unseen_episodes=0", "--set", "low_divergence_fraction=0.2"})
                  .code,
              kExitOk);
    const auto r = lawsim({"audit", "--dataset", data, "--out", (dir / "a").string()});
    ASSERT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("fraction_below_0.8000 = 0.2000 (10/50)"), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(dir / "a" / "audit.csv"));
}

TEST_F(Cli, TrainEvalReproducible)
{
    ASSERT_EQ(small_gen().code, kExitOk);
    const std::vector<std::string> tiny{"--set", "tf_epochs=2", "--set", "dagger_rounds=1", "--set", "dagger_epochs=1",
                                        "--set", "hidden=8", "--set", "max_steps=60"};
    auto train = [&](const std::string& out) {
        std::vector<std::string> args{"train", "--dataset", data, "--mode", "law-pano", "--seed", "5", "--out", out};
        args.insert(args.end(), tiny.begin(), tiny.end());
        return lawsim(args).code;
    };
    const auto t1 = (dir / "t1").string(), t2 = (dir / "t2").string();
    ASSERT_EQ(train(t1), kExitOk);
    ASSERT_EQ(train(t2), kExitOk);
    EXPECT_EQ(slurp(t1 + "/checkpoint.json"), slurp(t2 + "/checkpoint.json"));
    EXPECT_EQ(slurp(t1 + "/train_log.csv"), slurp(t2 + "/train_log.csv"));
    EXPECT_TRUE(fs::exists(fs::path(t1) / "checkpoint_round0.json"));
    EXPECT_TRUE(fs::exists(fs::path(t1) / "checkpoint_round1.json"));
    EXPECT_NE(slurp(t1 + "/config.txt").find("mode = law-pano"), std::string::npos);
    const auto e1 = (dir / "e1").string(), e2 = (dir / "e2").string();
    ASSERT_EQ(lawsim({"eval", "--dataset", data, "--checkpoint", t1 + "/checkpoint.json", "--set", "max_steps=60", "--out", e1}).code, kExitOk);
    ASSERT_EQ(lawsim({"eval", "--dataset", data, "--checkpoint", t2 + "/checkpoint.json", "--set", "max_steps=60", "--out", e2}).code, kExitOk);
    EXPECT_EQ(slurp(e1 + "/metrics.jsonl"), slurp(e2 + "/metrics.jsonl"));
    EXPECT_EQ(slurp(e1 + "/trajectories.jsonl"), slurp(e2 + "/trajectories.jsonl"));
}
