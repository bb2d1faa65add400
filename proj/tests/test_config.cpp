#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "lff/config.hpp"
#include "temp_dir.hpp"

using nlohmann::json;

namespace {

bool throws_config_with(const json& j, const std::string& needle) {
    try {
        (void)lff::config_from_json(j);
        return false;
    } catch (const lff::ConfigError& err) {
        return std::string(err.what()).find(needle) != std::string::npos;
    }
}

}  // namespace

TEST_CASE("default config is self-consistent") {
    auto c = lff::default_config();
    CHECK_NOTHROW(lff::validate_config(c));
    CHECK(c.model.dim == 64);
    CHECK(c.model.frames == 16);
    CHECK(c.train_steps == 2000);
    CHECK(c.lr == 1e-3);
    CHECK(c.seed == 42);
    CHECK(c.scheme == lff::WeightScheme::logarithmic);
    CHECK(c.sampler_steps == 50);
    CHECK(c.guidance.mode == lff::GuidanceMode::native);
    CHECK(c.baseline.empty());
    CHECK(c.clip_len == 0);
    CHECK(c.effective_clip_len() == c.window_length);
    c.clip_len = 5;
    CHECK(c.effective_clip_len() == 5);
}

TEST_CASE("config survives a json round trip") {
    lff::ExperimentConfig c;
    c.model.dim = 32;
    c.model.blocks = 2;
    c.model.heads = 2;
    c.model.patch = 2;
    c.model.channels = 1;
    c.model.height = 8;
    c.model.width = 8;
    c.model.frames = 8;
    c.model.adapter_k = 1;
    c.model.adapter_blocks = 1;
    c.model.audio_dim = 2;
    c.model.text_tokens = 2;
    c.scenes = 3;
    c.train_steps = 7;
    c.lr = 0.5;
    c.p_drop = 0.25;
    c.seed = 99;
    c.val_pairs = 2;
    c.guidance.mode = lff::GuidanceMode::cfg;
    c.guidance.alpha = 1.0;
    c.guidance.beta = 0.5;
    c.guidance.cfg_scale = 2.0;
    c.window_total = 32;
    c.window_length = 8;
    c.window_overlap = 4;
    c.scheme = lff::WeightScheme::uniform;
    c.fuse_first_step = true;
    c.double_buffer = true;
    c.sampler_steps = 5;
    c.adapter_off = true;
    c.modulation_random = true;
    c.cattn_off = true;
    c.baseline = "motion_frame";
    c.clip_len = 4;

    auto back = lff::config_from_json(lff::config_to_json(c));
    CHECK(back.model.dim == c.model.dim);
    CHECK(back.model.blocks == c.model.blocks);
    CHECK(back.model.heads == c.model.heads);
    CHECK(back.model.patch == c.model.patch);
    CHECK(back.model.channels == c.model.channels);
    CHECK(back.model.height == c.model.height);
    CHECK(back.model.width == c.model.width);
    CHECK(back.model.frames == c.model.frames);
    CHECK(back.model.adapter_k == c.model.adapter_k);
    CHECK(back.model.adapter_blocks == c.model.adapter_blocks);
    CHECK(back.model.audio_dim == c.model.audio_dim);
    CHECK(back.model.text_tokens == c.model.text_tokens);
    CHECK(back.scenes == c.scenes);
    CHECK(back.train_steps == c.train_steps);
    CHECK(back.lr == c.lr);
    CHECK(back.p_drop == c.p_drop);
    CHECK(back.seed == c.seed);
    CHECK(back.val_pairs == c.val_pairs);
    CHECK(back.guidance.mode == c.guidance.mode);
    CHECK(back.guidance.alpha == c.guidance.alpha);
    CHECK(back.guidance.beta == c.guidance.beta);
    CHECK(back.guidance.cfg_scale == c.guidance.cfg_scale);
    CHECK(back.window_total == c.window_total);
    CHECK(back.window_length == c.window_length);
    CHECK(back.window_overlap == c.window_overlap);
    CHECK(back.scheme == c.scheme);
    CHECK(back.fuse_first_step == c.fuse_first_step);
    CHECK(back.double_buffer == c.double_buffer);
    CHECK(back.sampler_steps == c.sampler_steps);
    CHECK(back.adapter_off == c.adapter_off);
    CHECK(back.modulation_random == c.modulation_random);
    CHECK(back.cattn_off == c.cattn_off);
    CHECK(back.baseline == c.baseline);
    CHECK(back.clip_len == c.clip_len);
}

TEST_CASE("missing groups keep defaults") {
    auto c = lff::config_from_json(json{{"train", {{"lr", 0.5}}}});
    CHECK(c.lr == 0.5);
    CHECK(c.train_steps == 2000);
    CHECK(c.model.dim == 64);
    CHECK(c.scheme == lff::WeightScheme::logarithmic);
}

TEST_CASE("unknown keys are rejected with their dotted path") {
    CHECK(throws_config_with(json{{"modle", json::object()}}, "modle"));
    CHECK(throws_config_with(json{{"train", {{"lrr", 1.0}}}}, "train.lrr"));
    CHECK(throws_config_with(json{{"window", {{"overlaps", 2}}}}, "window.overlaps"));
}

TEST_CASE("wrongly typed values name the offending key") {
    CHECK(throws_config_with(json{{"train", {{"steps", "many"}}}},
                             "train.steps must be an integer"));
    CHECK(throws_config_with(json{{"train", {{"lr", "fast"}}}}, "train.lr must be a number"));
    CHECK(throws_config_with(json{{"window", {{"fuse_first_step", 1}}}},
                             "window.fuse_first_step must be a boolean"));
    CHECK(throws_config_with(json{{"guidance", {{"mode", 5}}}},
                             "guidance.mode must be a string"));
    CHECK(throws_config_with(json{{"model", 3}}, "model must be an object"));
    CHECK_THROWS_AS((void)lff::config_from_json(json::array()), lff::ConfigError);
}

TEST_CASE("semantic validation names the failing constraint") {
    CHECK(throws_config_with(json{{"model", {{"dim", 7}}}}, "model.dim"));
    CHECK(throws_config_with(json{{"model", {{"dim", 64}, {"heads", 3}}}},
                             "divisible by model.heads"));
    CHECK(throws_config_with(json{{"model", {{"height", 18}}}}, "divisible by model.patch"));
    CHECK(throws_config_with(json{{"adapter", {{"k", 16}}}},
                             "adapter.k must be smaller than data.frames"));
    CHECK(throws_config_with(json{{"window", {{"length", 17}}}},
                             "window.length must not exceed data.frames"));
    CHECK(throws_config_with(json{{"window", {{"length", 8}, {"overlap", 8}}}},
                             "window.overlap must be smaller"));
    CHECK(throws_config_with(json{{"train", {{"p_drop", 1.5}}}}, "train.p_drop"));
    CHECK(throws_config_with(json{{"train", {{"val_pairs", 0}}}}, "train.val_pairs"));
    CHECK(throws_config_with(json{{"baseline", "bogus"}}, "baseline"));
    CHECK(throws_config_with(json{{"metrics", {{"clip_len", -1}}}}, "metrics.clip_len"));
    CHECK(throws_config_with(json{{"window", {{"scheme", "zigzag"}}}}, "window.scheme"));
}

TEST_CASE("config files load from disk") {
    auto dir = lfftest::make_temp_dir("config_load");
    const std::string path = (dir / "run.json").string();
    {
        std::ofstream out(path);
        out << R"({"train": {"steps": 11, "seed": 7}, "sampler": {"steps": 3}})";
    }
    auto c = lff::load_config(path);
    CHECK(c.train_steps == 11);
    CHECK(c.seed == 7);
    CHECK(c.sampler_steps == 3);

    CHECK_THROWS_AS((void)lff::load_config((dir / "absent.json").string()), lff::ConfigError);

    const std::string bad = (dir / "bad.json").string();
    {
        std::ofstream out(bad);
        out << "{nope";
    }
    try {
        (void)lff::load_config(bad);
        FAIL("expected ConfigError");
    } catch (const lff::ConfigError& err) {
        CHECK(std::string(err.what()).find("not valid JSON") != std::string::npos);
    }
}

TEST_CASE("environment seed override") {
    auto c = lff::default_config();
    unsetenv("LFF_SEED");
    lff::apply_env_seed(c);
    CHECK(c.seed == 42);

    setenv("LFF_SEED", "777", 1);
    lff::apply_env_seed(c);
    CHECK(c.seed == 777);

    setenv("LFF_SEED", "", 1);
    c.seed = 42;
    lff::apply_env_seed(c);
    CHECK(c.seed == 42);

    setenv("LFF_SEED", "x7", 1);
    CHECK_THROWS_AS(lff::apply_env_seed(c), lff::ConfigError);
    setenv("LFF_SEED", "7x", 1);
    CHECK_THROWS_AS(lff::apply_env_seed(c), lff::ConfigError);
    unsetenv("LFF_SEED");
}

TEST_CASE("run.json records the command and resolved config") {
    auto dir = lfftest::make_temp_dir("config_run");
    auto c = lff::default_config();
    c.model.dim = 32;
    const std::string out_dir = (dir / "nested" / "out").string();
    lff::write_run_json(out_dir, c, "lff train --config x.json");

    std::ifstream in((std::filesystem::path(out_dir) / "run.json"));
    REQUIRE(in.good());
    json j;
    in >> j;
    CHECK(j.at("command").get<std::string>() == "lff train --config x.json");
    CHECK(j.at("config").at("model").at("dim").get<std::int64_t>() == 32);
    CHECK(j.at("config").at("train").at("seed").get<std::uint64_t>() == 42);
}
