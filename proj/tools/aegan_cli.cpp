// aegan_cli: schema, sort, train, synthesize, evaluate, sensitivity, sparsity.
// Artifacts go to files, progress to stderr. Failures print one JSON line on
// stderr and exit nonzero.

#include <aegan/aegan.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace aegan;
using nlohmann::json;

namespace {

struct Options {
    std::string data, schema, target, order = "original", order_file, encoding = "full", out, config, checkpoint;
    std::string real, synth, test, orders = "original,type,correlation";
    bool no_classifier = false, joint = false;
    std::size_t epochs = 0, ae_epochs = 0, batch = 0, repeats = 1, n = 0, side = 0;
    std::size_t max_modes = 10, latent_len = 0, gan_hidden = 256, noise_len = 100;
    std::uint64_t seed = 0;
};

/// Options given explicitly on the command line, by long name.
struct Given {
    const CLI::App* app = nullptr;
    bool operator()(const std::string& name) const { return app->count("--" + name) > 0; }
};

void log(const std::string& msg) { std::cerr << "[aegan] " << msg << std::endl; }

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> fields)
        : Error(ErrorCode::config, "invalid configuration (" + std::to_string(fields.size()) + " problem" +
                                       (fields.size() == 1 ? "" : "s") + ")"),
          fields_(std::move(fields)) {}
    const std::vector<std::string>& fields() const { return fields_; }

private:
    std::vector<std::string> fields_;
};

class Violations {
public:
    void add(const std::string& field, const std::string& msg) { list_.push_back(field + ": " + msg); }
    void need(const std::string& field, const std::string& value) {
        if (value.empty()) add(field, "is required");
    }
    void need_file(const std::string& field, const std::string& value) {
        if (value.empty()) add(field, "is required");
        else if (!fs::is_regular_file(value)) add(field, "no such file '" + value + "'");
    }
    void check() const {
        if (!list_.empty()) throw ConfigError(list_);
    }

private:
    std::vector<std::string> list_;
};

// Keys accepted in a --config file besides the training options.
const std::vector<std::string> run_keys{"data", "schema", "order", "order_file", "encoding", "orders", "repeats",
                                        "max_modes", "latent_len", "gan_hidden", "noise_len", "n", "side"};

/// Applies a JSON config file underneath the command-line flags.
TrainConfig apply_config_file(Options& o, const Given& given, Violations& v) {
    TrainConfig cfg;
    if (o.config.empty()) return cfg;
    if (!fs::is_regular_file(o.config)) {
        v.add("config", "no such file '" + o.config + "'");
        return cfg;
    }
    const json j = read_json_file(o.config);
    if (!j.is_object()) {
        v.add("config", "must be a JSON object");
        return cfg;
    }
    json train_part = json::object();
    const auto known_train = train_config_to_json(cfg);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (known_train.contains(k)) train_part[k] = it.value();
        else if (std::find(run_keys.begin(), run_keys.end(), k) == run_keys.end()) v.add("config." + k, "unknown key");
    }
    try {
        cfg = train_config_from_json(train_part, cfg);
    } catch (const std::exception& e) {
        v.add("config", e.what());
    }
    auto str = [&](const char* key, const char* flag, std::string& field) {
        if (j.contains(key) && !given(flag)) field = j.at(key).get<std::string>();
    };
    auto num = [&](const char* key, const char* flag, std::size_t& field) {
        if (j.contains(key) && !given(flag)) field = j.at(key).get<std::size_t>();
    };
    try {
        str("data", "data", o.data);
        str("schema", "schema", o.schema);
        str("order", "order", o.order);
        str("order_file", "order-file", o.order_file);
        str("encoding", "encoding", o.encoding);
        str("orders", "orders", o.orders);
        num("repeats", "repeats", o.repeats);
        num("max_modes", "max-modes", o.max_modes);
        num("latent_len", "latent", o.latent_len);
        num("gan_hidden", "gan-hidden", o.gan_hidden);
        num("noise_len", "noise", o.noise_len);
        num("n", "n", o.n);
        num("side", "side", o.side);
    } catch (const json::exception& e) {
        v.add("config", e.what());
    }
    return cfg;
}

/// Training configuration: defaults, then the config file, then flags.
TrainConfig training_config(Options& o, const Given& given, Violations& v) {
    TrainConfig cfg = apply_config_file(o, given, v);
    if (given("epochs")) cfg.gan_epochs = o.epochs;
    if (given("ae-epochs")) cfg.ae_epochs = o.ae_epochs;
    if (given("batch")) cfg.batch_size = o.batch;
    if (o.no_classifier) cfg.use_classifier = false;
    if (o.joint) cfg.joint = true;
    if (given("seed") || o.config.empty()) cfg.seed = o.seed;
    else o.seed = cfg.seed;
    if (cfg.gan_epochs < 1) v.add("epochs", "must be >= 1");
    if (cfg.ae_epochs < 1) v.add("ae-epochs", "must be >= 1");
    if (cfg.batch_size < 2) v.add("batch", "must be >= 2");
    if (cfg.n_critic < 1) v.add("n_critic", "must be >= 1");
    if (!(cfg.learning_rate > 0)) v.add("learning_rate", "must be > 0");
    if (!(cfg.ae_learning_rate > 0)) v.add("ae_learning_rate", "must be > 0");
    if (cfg.gp_lambda < 0) v.add("gp_lambda", "must be >= 0");
    return cfg;
}

void check_encoding(const Options& o, Violations& v) {
    try {
        parse_encoding_mode(o.encoding);
    } catch (const Error&) {
        v.add("encoding", "must be one of full, no_msn, plain");
    }
}

void check_order(const Options& o, const Given& given, Violations& v) {
    if (!o.order_file.empty()) {
        if (given("order")) v.add("order", "cannot be combined with --order-file");
        if (!fs::is_regular_file(o.order_file)) v.add("order-file", "no such file '" + o.order_file + "'");
        return;
    }
    try {
        parse_order_method(o.order);
    } catch (const Error&) {
        v.add("order", "must be one of original, type, correlation, algorithm1");
    }
}

RawTable load_table(const Options& o) { return load_csv(o.data, load_schema(o.schema)); }

ColumnOrder resolve_order(const RawTable& table, OrderMethod method, const Options& o) {
    switch (method) {
    case OrderMethod::original: return original_order(table.schema);
    case OrderMethod::by_type: return order_by_type(table.schema);
    case OrderMethod::by_correlation: return order_by_correlation(table.schema, association_matrix(table));
    case OrderMethod::algorithm1: {
        const auto state = fit_encoder(table, parse_encoding_mode(o.encoding), o.max_modes, o.seed);
        return sort_features(table.schema, association_matrix(table), state.widths());
    }
    }
    throw Error(ErrorCode::invalid_argument, "unknown order method");
}

ColumnOrder resolve_order(const RawTable& table, const Options& o) {
    if (!o.order_file.empty()) return load_order(o.order_file);
    return resolve_order(table, parse_order_method(o.order), o);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- commands -------------------------------------------------------------

void cmd_schema(Options& o, const Given&) {
    Violations v;
    v.need_file("data", o.data);
    v.need("target", o.target);
    v.need("out", o.out);
    v.check();
    const auto schema = infer_schema(o.data, o.target);
    save_schema(schema, o.out);
    log("wrote schema with " + std::to_string(schema.size()) + " columns to " + o.out);
}

void cmd_sort(Options& o, const Given& given) {
    Violations v;
    apply_config_file(o, given, v);
    v.need_file("data", o.data);
    v.need_file("schema", o.schema);
    v.need("out", o.out);
    check_encoding(o, v);
    check_order(o, given, v);
    v.check();
    const auto table = load_table(o);
    const auto order = resolve_order(table, o);
    save_order(o.out, order);
    log("wrote " + std::string(to_string(order.method)) + " order to " + o.out);
}

void cmd_train(Options& o, const Given& given) {
    Violations v;
    const TrainConfig cfg = training_config(o, given, v);
    v.need_file("data", o.data);
    v.need_file("schema", o.schema);
    if (o.out.empty() && o.checkpoint.empty()) v.add("out", "checkpoint directory is required (--out or --checkpoint)");
    check_encoding(o, v);
    check_order(o, given, v);
    v.check();
    const std::string dir = o.out.empty() ? o.checkpoint : o.out;

    const auto table = load_table(o);
    const auto order = resolve_order(table, o);
    const auto permuted = table.reordered(order.order);
    log("fitting encoder (" + o.encoding + ") on " + std::to_string(permuted.num_rows()) + " rows");
    auto state = std::make_shared<const EncoderState>(
        fit_encoder(permuted, parse_encoding_mode(o.encoding), o.max_modes, cfg.seed));
    const auto encoded = encode_table(permuted, state);
    const auto spec = make_net_spec(*state, o.latent_len, o.gan_hidden, o.noise_len);
    log("training: width " + std::to_string(spec.total_width) + ", latent " + std::to_string(spec.latent_len) +
        ", ae_epochs " + std::to_string(cfg.ae_epochs) + ", gan_epochs " + std::to_string(cfg.gan_epochs) +
        (cfg.joint ? ", joint" : ", disjoint"));
    auto model = train(encoded, spec, cfg);
    save_checkpoint(dir, model);
    save_order((fs::path(dir) / "order.txt").string(), order);
    log("autoencoder epochs " + std::to_string(model.history.ae_loss.size()) + ", final loss " +
        fmt(model.history.ae_loss.empty() ? 0.0 : model.history.ae_loss.back()));
    log("wrote checkpoint to " + dir);
}

void cmd_synthesize(Options& o, const Given& given) {
    Violations v;
    apply_config_file(o, given, v);
    if (o.checkpoint.empty()) v.add("checkpoint", "is required");
    else if (!fs::is_regular_file(fs::path(o.checkpoint) / "meta.json"))
        v.add("checkpoint", "'" + o.checkpoint + "' has no meta.json");
    if (o.n < 1) v.add("n", "must be >= 1");
    v.need("out", o.out);
    v.check();
    const auto model = load_checkpoint(o.checkpoint);
    const auto table = synthesize(model, o.n, o.seed);
    write_csv(o.out, table);
    log("wrote " + std::to_string(table.num_rows()) + " synthetic rows to " + o.out);
}

void cmd_evaluate(Options& o, const Given& given) {
    Violations v;
    apply_config_file(o, given, v);
    if (o.real.empty() && !o.data.empty()) o.real = o.data;
    v.need_file("real", o.real);
    v.need_file("synth", o.synth);
    v.need_file("schema", o.schema);
    if (!o.test.empty() && !fs::is_regular_file(o.test)) v.add("test", "no such file '" + o.test + "'");
    v.need("out", o.out);
    v.check();

    const auto schema = load_schema(o.schema);
    const auto real = load_csv(o.real, schema);
    const auto synth = load_csv(o.synth, schema);
    EvalReport report;
    json seeds{{"seed", o.seed}};
    if (!o.test.empty()) {
        const auto test = load_csv(o.test, schema);
        report = evaluate(real, synth, &test, o.seed);
    } else {
        report = evaluate(real, synth);
        try {
            const auto [train_part, test_part] = split(real, 0.2, o.seed);
            report.ml_utility = ml_utility_diff(train_part, test_part, synth, o.seed);
            seeds["split"] = o.seed;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::stratification && e.code() != ErrorCode::invalid_argument) throw;
            log(std::string("ML utility skipped: ") + e.what());
        }
    }
    report.config = {{"real", fs::path(o.real).filename().string()},
                     {"synth", fs::path(o.synth).filename().string()},
                     {"test", o.test.empty() ? json(nullptr) : json(fs::path(o.test).filename().string())}};
    report.seeds = seeds;
    save_report(o.out, report);
    log("mean WD " + fmt(report.wd->mean) + ", dif_corr " + fmt(*report.dif_corr) +
        (report.ml_utility && report.ml_utility->diff ? ", ML utility diff " + fmt(*report.ml_utility->diff) : ""));
    log("wrote report to " + o.out);
}

void cmd_sensitivity(Options& o, const Given& given) {
    Violations v;
    const TrainConfig cfg = training_config(o, given, v);
    v.need_file("data", o.data);
    v.need_file("schema", o.schema);
    v.need("out", o.out);
    check_encoding(o, v);
    if (o.repeats < 1) v.add("repeats", "must be >= 1");
    const auto names = split_list(o.orders);
    if (names.size() < 2) v.add("orders", "needs at least two orders");
    for (const auto& n : names) {
        try {
            parse_order_method(n);
        } catch (const Error&) {
            v.add("orders", "unknown order '" + n + "'");
        }
    }
    v.check();

    const auto table = load_table(o);
    std::vector<ColumnOrder> orders;
    for (const auto& n : names) orders.push_back(resolve_order(table, parse_order_method(n), o));
    SensitivityOptions opt;
    opt.repeats = o.repeats;
    opt.encoding = parse_encoding_mode(o.encoding);
    opt.max_modes = o.max_modes;
    opt.latent_len = o.latent_len;
    opt.gan_hidden = o.gan_hidden;
    opt.noise_len = o.noise_len;
    opt.seed = o.seed;
    opt.log = log;
    EvalReport report;
    report.sensitivity = sensitivity_experiment(table, orders, cfg, opt);
    json c = train_config_to_json(cfg);
    c["encoding"] = o.encoding;
    c["repeats"] = o.repeats;
    c["orders"] = names;
    report.config = c;
    report.seeds = {{"seed", o.seed}};
    save_report(o.out, report);
    for (const auto& s : report.sensitivity->orders)
        log("order " + s.method + ": mean WD " + (s.mean_wd ? fmt(*s.mean_wd) : std::string("n/a")) + " (" +
            std::to_string(s.successes) + "/" + std::to_string(o.repeats) + " runs)");
    const auto& pct = report.sensitivity->max_diff_pct;
    log("max diff %: " + (pct ? fmt(*pct) : std::string("n/a")));
    log("wrote report to " + o.out);
}

void cmd_sparsity(Options& o, const Given& given) {
    Violations v;
    apply_config_file(o, given, v);
    v.need_file("data", o.data);
    v.need_file("schema", o.schema);
    v.need("out", o.out);
    check_encoding(o, v);
    check_order(o, given, v);
    v.check();
    const auto table = load_table(o);
    const auto permuted = table.reordered(resolve_order(table, o).order);
    const auto state = fit_encoder(permuted, parse_encoding_mode(o.encoding), o.max_modes, o.seed);
    const auto layout = o.side ? square_layout_with_side(state.total_width, o.side) : square_layout(state.total_width);
    const auto report = sparsity_report(state, layout);
    write_json_file(o.out, sparsity_to_json(report));
    log("side " + std::to_string(report.side) + ", zero fraction " + fmt(report.zero_fraction));
}

json error_line(const std::exception& e) {
    json j;
    if (const auto* ae = dynamic_cast<const Error*>(&e)) {
        j["error"] = std::string(to_string(ae->code()));
        if (const auto* ce = dynamic_cast<const CellError*>(ae)) {
            j["column"] = ce->column();
            j["row"] = ce->row();
        }
        if (const auto* cfg = dynamic_cast<const ConfigError*>(ae)) j["violations"] = cfg->fields();
    } else {
        j["error"] = "internal";
    }
    j["message"] = e.what();
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autoencoder-GAN tabular data synthesizer"};
    app.require_subcommand(1);
    Options o;

    auto add_data = [&](CLI::App* c) {
        c->add_option("--data", o.data, "input CSV");
        c->add_option("--schema", o.schema, "schema JSON");
    };
    auto add_common = [&](CLI::App* c) {
        c->add_option("--out", o.out, "output path");
        c->add_option("--seed", o.seed, "random seed");
        c->add_option("--config", o.config, "JSON config file; flags take precedence");
    };
    auto add_encoding = [&](CLI::App* c) {
        c->add_option("--encoding", o.encoding, "full | no_msn | plain");
        c->add_option("--max-modes", o.max_modes, "mixture components per continuous column");
    };
    auto add_order = [&](CLI::App* c) {
        c->add_option("--order", o.order, "original | type | correlation | algorithm1");
        c->add_option("--order-file", o.order_file, "explicit column order file");
    };
    auto add_training = [&](CLI::App* c) {
        c->add_flag("--no-classifier", o.no_classifier, "disable the auxiliary classifier");
        c->add_flag("--joint", o.joint, "co-train the autoencoder with the GAN");
        c->add_option("--epochs", o.epochs, "GAN epochs");
        c->add_option("--ae-epochs", o.ae_epochs, "autoencoder epochs");
        c->add_option("--batch", o.batch, "batch size");
        c->add_option("--latent", o.latent_len, "latent length (0: derived)");
        c->add_option("--gan-hidden", o.gan_hidden, "hidden width of G and D");
        c->add_option("--noise", o.noise_len, "noise length");
    };

    auto* schema = app.add_subcommand("schema", "infer a schema from a CSV");
    schema->add_option("--data", o.data, "input CSV");
    schema->add_option("--target", o.target, "target column");
    add_common(schema);

    auto* sort = app.add_subcommand("sort", "compute a column order");
    add_data(sort);
    add_encoding(sort);
    add_order(sort);
    add_common(sort);

    auto* trn = app.add_subcommand("train", "train a model and write a checkpoint directory");
    add_data(trn);
    add_encoding(trn);
    add_order(trn);
    add_training(trn);
    add_common(trn);
    trn->add_option("--checkpoint", o.checkpoint, "checkpoint directory (alias of --out)");

    auto* syn = app.add_subcommand("synthesize", "sample rows from a checkpoint");
    syn->add_option("--checkpoint", o.checkpoint, "checkpoint directory");
    syn->add_option("--n", o.n, "number of rows");
    add_common(syn);

    auto* ev = app.add_subcommand("evaluate", "compare a synthetic table with a real one");
    ev->add_option("--real", o.real, "real CSV");
    ev->add_option("--data", o.data, "alias of --real");
    ev->add_option("--synth", o.synth, "synthetic CSV");
    ev->add_option("--test", o.test, "held-out real CSV for ML utility");
    ev->add_option("--schema", o.schema, "schema JSON");
    add_common(ev);

    auto* sens = app.add_subcommand("sensitivity", "train under several column orders and compare");
    add_data(sens);
    add_encoding(sens);
    add_training(sens);
    sens->add_option("--orders", o.orders, "comma-separated order methods");
    sens->add_option("--repeats", o.repeats, "runs per order");
    add_common(sens);

    auto* sp = app.add_subcommand("sparsity", "report the zero fraction of the square layout");
    add_data(sp);
    add_encoding(sp);
    add_order(sp);
    sp->add_option("--side", o.side, "square side (0: smallest that fits)");
    add_common(sp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << std::endl;
        return 2;
    }

    try {
        const CLI::App* cmd = app.get_subcommands().front();
        const Given given{cmd};
        if (cmd == schema) cmd_schema(o, given);
        else if (cmd == sort) cmd_sort(o, given);
        else if (cmd == trn) cmd_train(o, given);
        else if (cmd == syn) cmd_synthesize(o, given);
        else if (cmd == ev) cmd_evaluate(o, given);
        else if (cmd == sens) cmd_sensitivity(o, given);
        else if (cmd == sp) cmd_sparsity(o, given);
    } catch (const std::exception& e) {
        std::cerr << error_line(e).dump() << std::endl;
        return 1;
    }
    return 0;
}
