#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "flowpix/dataset.hpp"
#include "flowpix/encode.hpp"
#include "flowpix/error.hpp"
#include "flowpix/evalreport.hpp"
#include "flowpix/forest.hpp"
#include "flowpix/pixelclf.hpp"
#include "flowpix/schema.hpp"
#include "flowpix/util.hpp"
#include "json.hpp"

namespace flowpix::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kSchemaFile = "schema.txt";
constexpr const char* kLayoutFile = "layout.csv";
constexpr const char* kRunFile = "run.json";
constexpr const char* kForestFile = "forest.model";
constexpr const char* kPixelFile = "pixel.model";

// Thrown for bad flag values that CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    std::string train;
    std::string test;
    std::string input;
    std::string out;
    std::string data;
    std::string model;
    std::string schema;
    std::string manifest;
    std::string label_column{kUnswLabelColumn};

    int pad = kDefaultPadValue;
    bool shuffle_layout = false;

    std::size_t cap = 390;
    double holdout = 0.2;
    std::string quota;
    bool binary = false;

    std::string classifier = "forest";
    std::string task = "multiclass";
    std::string split;

    std::size_t trees = 100;
    std::size_t mtry = 0;
    std::size_t max_depth = 0;
    std::size_t min_leaf = 1;
    bool no_bootstrap = false;

    std::size_t epochs = 50;
    std::size_t batch = 16;
    double lr = 0.001;
    double l2 = 0.0;

    std::string format = "text";
    std::size_t top = 0;
};

struct Context {
    Options opt;
    CLI::App* command = nullptr;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create directory " + dir);
}

std::string path_in(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// Config echo: every option of the command with its resolved value, plus the
// equivalent command line.
void write_run_json(const Context& ctx, const std::string& dir) {
    ordered_json doc;
    doc["tool"] = "flowpix";
    doc["version"] = kVersion;
    doc["command"] = ctx.command->get_name();
    ordered_json options = ordered_json::object();
    std::vector<std::string> line{"flowpix", ctx.command->get_name()};
    for (const CLI::Option* o : ctx.command->get_options()) {
        if (o->get_lnames().empty() || o->get_lnames()[0] == "help") continue;
        const std::string name = o->get_lnames()[0];
        if (o->get_type_size() == 0) {
            const bool set = o->count() > 0;
            options[name] = set;
            if (set) line.push_back("--" + name);
            continue;
        }
        std::string value = o->count() ? join(o->results(), ",") : o->get_default_str();
        options[name] = value;
        if (!value.empty()) {
            line.push_back("--" + name);
            line.push_back(value);
        }
    }
    doc["options"] = std::move(options);
    doc["command_line"] = join(line, " ");
    write_file(path_in(dir, kRunFile), doc.dump(2) + "\n");
}

LoadOptions load_options(const Options& opt, Split split) {
    LoadOptions lo;
    lo.label_column = opt.label_column;
    lo.split = split;
    return lo;
}

void report_issues(const LabeledTable& table, std::ostream& err) {
    if (table.issues.empty()) return;
    err << "warning: " << table.source << ": skipped " << table.issues.size() << " malformed row(s)";
    const auto& first = table.issues.front();
    err << "; first at line " << first.row << ": " << first.message << '\n';
}

std::size_t pad_value(const Options& opt) {
    if (opt.pad < 0 || opt.pad > 255) throw UsageError("--pad must be in 0..255");
    return static_cast<std::size_t>(opt.pad);
}

// ---- dataset directories -------------------------------------------------

struct DatasetDir {
    std::string root;
    FeatureSchema schema;
    std::optional<LayoutManifest> layout;
};

DatasetDir open_dataset(const std::string& root) {
    DatasetDir d;
    d.root = root;
    d.schema = load_schema(path_in(root, kSchemaFile));
    d.layout.emplace(load_manifest(path_in(root, kLayoutFile), d.schema));
    return d;
}

std::vector<Thumbnail> load_split(const DatasetDir& d, Split split, std::size_t workers) {
    const auto index = load_index(path_in(d.root, index_file_name(split)));
    return load_thumbnails(d.root, index, d.schema.class_names, workers);
}

std::vector<std::string> binary_classes() { return {std::string(kNormalClass), "Attack"}; }

// Maps thumbnail labels from `from` class names to `to`. A two-class
// Normal/Attack target absorbs every non-Normal family into Attack.
void map_labels(std::vector<Thumbnail>& thumbs, const std::vector<std::string>& from,
                const std::vector<std::string>& to) {
    const bool binary_target = to == binary_classes();
    std::vector<std::size_t> mapping(from.size());
    for (std::size_t c = 0; c < from.size(); ++c) {
        const auto it = std::find(to.begin(), to.end(), from[c]);
        if (it != to.end()) {
            mapping[c] = static_cast<std::size_t>(it - to.begin());
        } else if (binary_target) {
            mapping[c] = 1;
        } else {
            mapping[c] = to.size();  // only an error if a record actually carries it
        }
    }
    for (auto& t : thumbs) {
        const std::size_t m = mapping.at(t.label);
        if (m >= to.size()) throw Error(ErrorKind::format, "class '" + from[t.label] + "' is unknown to the model");
        t.label = m;
    }
}

std::vector<std::string> task_classes(const Options& opt, const FeatureSchema& schema) {
    if (opt.task == "binary") return binary_classes();
    return schema.class_names;
}

ForestParams forest_params(const Options& opt) {
    ForestParams p;
    p.n_trees = opt.trees;
    if (opt.mtry) p.mtry = opt.mtry;
    if (opt.max_depth) p.max_depth = opt.max_depth;
    p.min_samples_leaf = opt.min_leaf;
    p.seed = opt.seed;
    p.bootstrap = !opt.no_bootstrap;
    return p;
}

TrainConfig pixel_config(const Options& opt) {
    TrainConfig c;
    c.epochs = opt.epochs;
    c.batch_size = opt.batch;
    c.learning_rate = opt.lr;
    c.l2 = opt.l2;
    c.seed = opt.seed;
    return c;
}

// A trained model of either family, with what evaluation needs.
struct AnyModel {
    std::optional<ForestModel> forest;
    std::optional<LinearModel> pixel;

    const std::vector<std::string>& class_names() const {
        return forest ? forest->class_names : pixel->class_names;
    }
    std::string digest() const { return forest ? forest_digest(*forest) : linear_digest(*pixel); }
    const char* kind() const { return forest ? "forest" : "pixel"; }
};

AnyModel train_model(const Options& opt, const FeatureSchema& schema, const LayoutManifest& layout,
                     std::vector<Thumbnail> thumbs, std::ostream& out) {
    const auto classes = task_classes(opt, schema);
    map_labels(thumbs, schema.class_names, classes);
    AnyModel model;
    if (opt.classifier == "forest") {
        const auto data = feature_matrix(thumbs, schema, layout, classes.size());
        model.forest = train_forest(data, forest_params(opt), opt.workers);
        model.forest->class_names = classes;
        model.forest->schema_digest = schema.digest();
    } else {
        auto result = train_pixel_model(thumbs, classes, pixel_config(opt));
        out << "pixel: initial loss " << format_fixed(result.initial_loss, 4) << ", final epoch loss "
            << format_fixed(result.epoch_loss.back(), 4) << '\n';
        model.pixel = std::move(result.model);
    }
    return model;
}

std::vector<std::size_t> predict_all(const AnyModel& model, const FeatureSchema& schema,
                                     const LayoutManifest& layout, const std::vector<Thumbnail>& thumbs,
                                     std::size_t workers) {
    if (model.forest) {
        if (!model.forest->schema_digest.empty() && model.forest->schema_digest != schema.digest()) {
            throw Error(ErrorKind::stale_manifest,
                        "model was trained against schema " + model.forest->schema_digest +
                            ", dataset has " + schema.digest());
        }
        const auto data = feature_matrix(thumbs, schema, layout, model.forest->n_classes);
        return predict_batch(*model.forest, data, workers);
    }
    std::vector<std::size_t> pred;
    pred.reserve(thumbs.size());
    for (const auto& t : thumbs) pred.push_back(predict_class(*model.pixel, t.pixels));
    return pred;
}

EvalReport evaluate(const AnyModel& model, const FeatureSchema& schema, const LayoutManifest& layout,
                    std::vector<Thumbnail> thumbs, Split split, std::size_t workers) {
    const std::string data_digest = thumbnails_digest(thumbs);
    map_labels(thumbs, schema.class_names, model.class_names());
    const auto pred = predict_all(model, schema, layout, thumbs, workers);
    std::vector<std::size_t> truth;
    truth.reserve(thumbs.size());
    for (const auto& t : thumbs) truth.push_back(t.label);
    return make_report(confusion(truth, pred, model.class_names()),
                       {{"classifier", model.kind()},
                        {"split", to_string(split)},
                        {"records", std::to_string(thumbs.size())},
                        {"model_digest", model.digest()},
                        {"data_digest", data_digest},
                        {"schema_digest", schema.digest()}});
}

AnyModel load_any_model(const std::string& path) {
    const std::string text = read_file(path);
    AnyModel model;
    if (text.starts_with("flowpix-forest")) {
        model.forest = parse_forest(text);
    } else if (text.starts_with("flowpix-linear")) {
        model.pixel = parse_linear(text);
    } else {
        throw Error(ErrorKind::format, path + " is not a flowpix model file");
    }
    return model;
}

void write_reports(const EvalReport& report, const std::string& dir) {
    ensure_dir(dir);
    write_file(path_in(dir, "report.txt"), render_report(report, ReportFormat::text));
    write_file(path_in(dir, "report.csv"), render_report(report, ReportFormat::csv));
    write_file(path_in(dir, "report.json"), render_report(report, ReportFormat::json));
}

Split split_or(const Options& opt, Split fallback) {
    if (opt.split.empty()) return fallback;
    try {
        return parse_split(opt.split);
    } catch (const Error&) {
        throw UsageError("--split must be train or test");
    }
}

// ---- commands ------------------------------------------------------------

FeatureSchema schema_from_train(const Options& opt, std::ostream& err, LabeledTable* keep = nullptr) {
    auto train = load_csv(opt.train, load_options(opt, Split::train));
    report_issues(train, err);
    auto schema = infer_schema(train, unsw_schema_options());
    if (keep) *keep = std::move(train);
    return schema;
}

void describe_layout(const FeatureSchema& schema, const LayoutManifest& layout, std::ostream& out) {
    out << "schema " << schema.digest() << ": " << schema.features.size() << " features ("
        << schema.numeric_count() << " numeric, " << schema.categorical_count() << " categorical), "
        << (kCanvasCells - layout.pad_count()) << " encoded columns, " << layout.pad_count()
        << " pad cells\n";
}

int cmd_schema(Context& ctx) {
    const auto& opt = ctx.opt;
    const auto schema = schema_from_train(opt, *ctx.err);
    const auto layout = build_layout(schema);
    ensure_dir(opt.out);
    save_schema(schema, path_in(opt.out, kSchemaFile));
    save_manifest(layout, path_in(opt.out, kLayoutFile));
    write_run_json(ctx, opt.out);
    describe_layout(schema, layout, *ctx.out);
    return kExitOk;
}

int cmd_encode(Context& ctx) {
    const auto& opt = ctx.opt;
    const auto pad = static_cast<std::uint8_t>(pad_value(opt));
    if (!opt.manifest.empty() && opt.schema.empty()) throw UsageError("--manifest requires --schema");

    LabeledTable train;
    FeatureSchema schema;
    if (opt.schema.empty()) {
        schema = schema_from_train(opt, *ctx.err, &train);
    } else {
        schema = load_schema(opt.schema);
    }
    LayoutManifest layout = opt.manifest.empty() ? build_layout(schema) : load_manifest(opt.manifest, schema);
    if (opt.shuffle_layout) layout = permute_layout(layout, opt.seed);

    ensure_dir(opt.out);
    save_schema(schema, path_in(opt.out, kSchemaFile));
    save_manifest(layout, path_in(opt.out, kLayoutFile));
    describe_layout(schema, layout, *ctx.out);

    auto encode_one = [&](const LabeledTable& table) {
        const auto index = encode_dataset(table, schema, layout, opt.out, pad, opt.workers);
        *ctx.out << to_string(table.split) << ": " << index.entries.size() << " thumbnails";
        if (index.skipped) *ctx.out << ", " << index.skipped << " record(s) skipped";
        *ctx.out << '\n';
    };
    // Reloaded against the schema so labels follow its class order.
    train = load_csv(opt.train, load_options(opt, Split::train), &schema);
    if (!opt.schema.empty()) report_issues(train, *ctx.err);
    encode_one(train);
    if (!opt.test.empty()) {
        const auto test = load_csv(opt.test, load_options(opt, Split::test), &schema);
        report_issues(test, *ctx.err);
        encode_one(test);
    }
    write_run_json(ctx, opt.out);
    return kExitOk;
}

int cmd_counts(Context& ctx) {
    const auto& opt = ctx.opt;
    const auto train = load_csv(opt.train, load_options(opt, Split::train));
    report_issues(train, *ctx.err);
    const auto test = load_csv(opt.test, load_options(opt, Split::test));
    report_issues(test, *ctx.err);
    const std::string report = count_report(train, test);
    if (opt.out.empty()) {
        *ctx.out << report;
    } else {
        write_file(opt.out, report);
    }
    return kExitOk;
}

std::vector<std::size_t> parse_quota(const std::string& text, const std::vector<std::string>& classes) {
    std::vector<std::size_t> quotas(classes.size(), 0);
    for (const auto& item : split(text, ',')) {
        const auto eq = item.find('=');
        const auto n = eq == std::string::npos ? std::nullopt : parse_uint(item.substr(eq + 1));
        if (!n) throw UsageError("--quota expects CLASS=N[,CLASS=N...], got '" + item + "'");
        const std::string name(trim(std::string_view(item).substr(0, eq)));
        const auto it = std::find(classes.begin(), classes.end(), name);
        if (it == classes.end()) throw UsageError("--quota names unknown class '" + name + "'");
        quotas[static_cast<std::size_t>(it - classes.begin())] = static_cast<std::size_t>(*n);
    }
    return quotas;
}

void print_class_counts(const std::string& title, const LabeledTable& table, std::ostream& out) {
    out << title << ": " << table.size() << " records\n";
    for (std::size_t c = 0; c < table.class_names.size(); ++c) {
        out << "  " << table.class_names[c] << ' ' << table.class_counts[c] << '\n';
    }
}

int cmd_subset(Context& ctx) {
    const auto& opt = ctx.opt;
    auto table = load_csv(opt.input, load_options(opt, Split::train));
    report_issues(table, *ctx.err);
    if (opt.binary) table = to_binary(table);
    ensure_dir(opt.out);
    if (!opt.quota.empty()) {
        const auto sample = stratified_sample(table, parse_quota(opt.quota, table.class_names), opt.seed);
        save_csv(sample, path_in(opt.out, "sample.csv"));
        print_class_counts("sample", sample, *ctx.out);
    } else {
        SubsetPlan plan;
        plan.per_class_cap = opt.cap;
        plan.holdout_fraction = opt.holdout;
        plan.seed = opt.seed;
        const auto subset = make_balanced_subset(table, plan);
        save_csv(subset.train, path_in(opt.out, "train.csv"));
        save_csv(subset.holdout, path_in(opt.out, "holdout.csv"));
        print_class_counts("train", subset.train, *ctx.out);
        print_class_counts("holdout", subset.holdout, *ctx.out);
        for (const auto& c : subset.flagged) {
            *ctx.err << "warning: class " << c << " has fewer than two records; kept whole in train\n";
        }
    }
    write_run_json(ctx, opt.out);
    return kExitOk;
}

int cmd_train(Context& ctx) {
    const auto& opt = ctx.opt;
    const auto d = open_dataset(opt.data);
    const Split split = split_or(opt, Split::train);
    const auto model = train_model(opt, d.schema, *d.layout, load_split(d, split, opt.workers), *ctx.out);
    ensure_dir(opt.out);
    const std::string path = path_in(opt.out, model.forest ? kForestFile : kPixelFile);
    if (model.forest) {
        save_forest(*model.forest, path);
    } else {
        save_linear(*model.pixel, path);
    }
    write_run_json(ctx, opt.out);
    *ctx.out << model.kind() << " model " << model.digest() << " -> " << path << '\n';
    return kExitOk;
}

int cmd_eval(Context& ctx) {
    const auto& opt = ctx.opt;
    const auto format = parse_report_format(opt.format);
    const auto d = open_dataset(opt.data);
    const auto model = load_any_model(opt.model);
    const Split split = split_or(opt, Split::test);
    const auto report = evaluate(model, d.schema, *d.layout, load_split(d, split, opt.workers), split, opt.workers);
    if (!opt.out.empty()) {
        write_reports(report, opt.out);
        write_run_json(ctx, opt.out);
    }
    *ctx.out << render_report(report, format);
    return kExitOk;
}

int cmd_importance(Context& ctx) {
    const auto& opt = ctx.opt;
    const auto model = load_any_model(opt.model);
    if (!model.forest) throw Error(ErrorKind::format, "importance needs a forest model");
    auto ranked = importance(*model.forest);
    if (opt.top && opt.top < ranked.size()) ranked.resize(opt.top);
    if (opt.format == "csv") {
        *ctx.out << "rank,feature,importance\n";
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            *ctx.out << i + 1 << ',' << csv_escape(ranked[i].feature) << ','
                     << format_fixed(ranked[i].importance, 6) << '\n';
        }
    } else if (opt.format == "text") {
        std::size_t width = 7;
        for (const auto& e : ranked) width = std::max(width, e.feature.size());
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            std::ostringstream line;
            line << std::setw(3) << i + 1 << "  " << std::left << std::setw(static_cast<int>(width))
                 << ranked[i].feature << "  " << format_fixed(ranked[i].importance, 6);
            *ctx.out << line.str() << '\n';
        }
    } else {
        throw UsageError("--format must be text or csv for importance");
    }
    return kExitOk;
}

int cmd_ablate(Context& ctx) {
    const auto& opt = ctx.opt;
    const auto d = open_dataset(opt.data);
    const auto& base = *d.layout;
    const auto shuffled = permute_layout(base, opt.seed);

    auto train = load_split(d, Split::train, opt.workers);
    auto test = load_split(d, Split::test, opt.workers);
    auto relaid = [&](std::vector<Thumbnail> thumbs) {
        for (auto& t : thumbs) t.pixels = relayout(t.pixels, base, shuffled);
        return thumbs;
    };

    ensure_dir(opt.out);
    save_manifest(shuffled, path_in(opt.out, "shuffled_layout.csv"));
    const auto m0 = train_model(opt, d.schema, base, train, *ctx.out);
    const auto r0 = evaluate(m0, d.schema, base, test, Split::test, opt.workers);
    const auto m1 = train_model(opt, d.schema, shuffled, relaid(train), *ctx.out);
    const auto r1 = evaluate(m1, d.schema, shuffled, relaid(test), Split::test, opt.workers);
    write_reports(r0, path_in(opt.out, "default"));
    write_reports(r1, path_in(opt.out, "shuffled"));

    const double a0 = r0.overall_accuracy.value_or(0.0);
    const double a1 = r1.overall_accuracy.value_or(0.0);
    ordered_json summary;
    summary["classifier"] = opt.classifier;
    summary["default_accuracy"] = std::round(a0 * 1e4) / 1e4;
    summary["shuffled_accuracy"] = std::round(a1 * 1e4) / 1e4;
    summary["delta"] = std::round((a1 - a0) * 1e4) / 1e4;
    summary["default_model_digest"] = m0.digest();
    summary["shuffled_model_digest"] = m1.digest();
    write_file(path_in(opt.out, "ablation.json"), summary.dump(2) + "\n");
    write_run_json(ctx, opt.out);

    *ctx.out << "default layout:  " << format_fixed(a0 * 100.0, 2) << "%\n"
             << "shuffled layout: " << format_fixed(a1 * 100.0, 2) << "%\n"
             << "delta:           " << format_fixed((a1 - a0) * 100.0, 2) << " points\n";
    return kExitOk;
}

// ---- grammar -------------------------------------------------------------

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--seed", opt.seed, "Seed for every stochastic stage")->capture_default_str();
    cmd->add_option("--workers", opt.workers, "Worker threads; outputs do not depend on it")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--classifier", opt.classifier, "forest or pixel")
        ->capture_default_str()
        ->check(CLI::IsMember({"forest", "pixel"}));
    cmd->add_option("--task", opt.task, "multiclass or binary (Normal vs Attack)")
        ->capture_default_str()
        ->check(CLI::IsMember({"multiclass", "binary"}));
    cmd->add_option("--trees", opt.trees, "Forest: number of trees")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--mtry", opt.mtry, "Forest: features tried per split (0 = ceil(sqrt(d)))")->capture_default_str();
    cmd->add_option("--max-depth", opt.max_depth, "Forest: depth limit (0 = unlimited)")->capture_default_str();
    cmd->add_option("--min-leaf", opt.min_leaf, "Forest: minimum samples per leaf")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--no-bootstrap", opt.no_bootstrap, "Forest: grow every tree on the full training set");
    cmd->add_option("--epochs", opt.epochs, "Pixel: training epochs")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--batch", opt.batch, "Pixel: mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--lr", opt.lr, "Pixel: learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
    cmd->add_option("--l2", opt.l2, "Pixel: L2 penalty on weights")->capture_default_str()->check(CLI::NonNegativeNumber);
}

std::map<std::string, int (*)(Context&)> build_app(CLI::App& app, Options& opt) {
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);
    app.footer("Exit status: 0 success, 1 usage error, 2 data or format error.");

    auto* schema = app.add_subcommand("schema", "Infer the feature schema and layout manifest from training data");
    schema->add_option("--train", opt.train, "Training CSV")->required();
    schema->add_option("--out", opt.out, "Output directory")->required();
    schema->add_option("--label-column", opt.label_column, "Class label column")->capture_default_str();

    auto* encode = app.add_subcommand("encode", "Encode CSV records into a 16x16 PNG thumbnail dataset");
    encode->add_option("--train", opt.train, "Training CSV (schema source unless --schema)")->required();
    encode->add_option("--test", opt.test, "Test CSV");
    encode->add_option("--out", opt.out, "Dataset directory")->required();
    encode->add_option("--schema", opt.schema, "Use this schema instead of inferring one");
    encode->add_option("--manifest", opt.manifest, "Use this layout manifest (requires --schema)");
    encode->add_option("--pad", opt.pad, "Pixel value of padding cells")->capture_default_str()->check(CLI::Range(0, 255));
    encode->add_flag("--shuffle-layout", opt.shuffle_layout, "Permute the layout with --seed");
    encode->add_option("--label-column", opt.label_column, "Class label column")->capture_default_str();
    add_common(encode, opt);

    auto* counts = app.add_subcommand("counts", "Per-class record counts of the train and test CSVs");
    counts->add_option("--train", opt.train, "Training CSV")->required();
    counts->add_option("--test", opt.test, "Test CSV")->required();
    counts->add_option("--out", opt.out, "Write the CSV report here instead of stdout");
    counts->add_option("--label-column", opt.label_column, "Class label column")->capture_default_str();

    auto* subset = app.add_subcommand("subset", "Balanced train/holdout subset, or a stratified sample with --quota");
    subset->add_option("--input", opt.input, "Source CSV")->required();
    subset->add_option("--out", opt.out, "Output directory")->required();
    subset->add_option("--cap", opt.cap, "Records kept per class")->capture_default_str()->check(CLI::PositiveNumber);
    subset->add_option("--holdout", opt.holdout, "Holdout fraction per class")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    subset->add_option("--quota", opt.quota, "Stratified sample, e.g. Normal=500,Attack=542");
    subset->add_flag("--binary", opt.binary, "Stratify on Normal vs Attack");
    subset->add_option("--label-column", opt.label_column, "Class label column")->capture_default_str();
    subset->add_option("--seed", opt.seed, "Sampling seed")->capture_default_str();

    auto* train = app.add_subcommand("train", "Train a classifier on an encoded dataset");
    train->add_option("--data", opt.data, "Dataset directory from encode")->required();
    train->add_option("--out", opt.out, "Model directory")->required();
    train->add_option("--split", opt.split, "Split to train on (default train)");
    add_model_flags(train, opt);
    add_common(train, opt);

    auto* eval = app.add_subcommand("eval", "Evaluate a model: accuracy, per-class recall, confusion matrix");
    eval->add_option("--data", opt.data, "Dataset directory from encode")->required();
    eval->add_option("--model", opt.model, "Model file from train")->required();
    eval->add_option("--split", opt.split, "Split to evaluate (default test)");
    eval->add_option("--format", opt.format, "text, csv or json")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "csv", "json"}));
    eval->add_option("--out", opt.out, "Also write report.{txt,csv,json} here");
    eval->add_option("--workers", opt.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    auto* imp = app.add_subcommand("importance", "Rank features by mean decrease in Gini");
    imp->add_option("--model", opt.model, "Forest model file")->required();
    imp->add_option("--top", opt.top, "Show only the top N (0 = all)")->capture_default_str();
    imp->add_option("--format", opt.format, "text or csv")->capture_default_str()->check(CLI::IsMember({"text", "csv"}));

    auto* ablate = app.add_subcommand("ablate-shuffle", "Compare accuracy under the default and a shuffled layout");
    ablate->add_option("--data", opt.data, "Dataset directory with train and test splits")->required();
    ablate->add_option("--out", opt.out, "Output directory")->required();
    add_model_flags(ablate, opt);
    add_common(ablate, opt);

    for (auto* cmd : app.get_subcommands({})) cmd->set_help_flag("--help", "Print this help and exit");

    return {{"schema", cmd_schema},   {"encode", cmd_encode}, {"counts", cmd_counts},
            {"subset", cmd_subset},   {"train", cmd_train},   {"eval", cmd_eval},
            {"importance", cmd_importance}, {"ablate-shuffle", cmd_ablate}};
}

std::optional<std::string> closest(const std::string& word, const std::vector<std::string>& candidates) {
    std::optional<std::string> best;
    std::size_t best_d = std::max<std::size_t>(2, word.size() / 3) + 1;
    for (const auto& c : candidates) {
        const std::size_t d = edit_distance(word, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// Names the first unknown flag or subcommand, with a suggestion when one is close.
std::string usage_hint(CLI::App& app, const std::vector<std::string>& args) {
    std::vector<std::string> commands;
    for (auto* cmd : app.get_subcommands({})) commands.push_back(cmd->get_name());
    if (args.size() < 2 || args[1].starts_with("-")) return {};
    CLI::App* cmd = nullptr;
    for (auto* c : app.get_subcommands({})) {
        if (c->get_name() == args[1]) cmd = c;
    }
    if (!cmd) {
        const auto s = closest(args[1], commands);
        return "unknown command '" + args[1] + "'" + (s ? "; did you mean '" + *s + "'?" : "");
    }
    std::vector<std::string> flags;
    for (const CLI::Option* o : cmd->get_options()) {
        for (const auto& l : o->get_lnames()) flags.push_back("--" + l);
    }
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (!args[i].starts_with("--")) continue;
        const std::string flag = args[i].substr(0, args[i].find('='));
        if (std::find(flags.begin(), flags.end(), flag) != flags.end()) continue;
        const auto s = closest(flag, flags);
        return "unknown flag '" + flag + "' for " + cmd->get_name() + (s ? "; did you mean '" + *s + "'?" : "");
    }
    return {};
}

}  // namespace

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    CLI::App app{"flowpix: network-flow records as 16x16 grayscale thumbnails, with forest and pixel classifiers",
                 "flowpix"};
    const auto handlers = build_app(app, ctx.opt);

    std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(reversed.begin(), reversed.end());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto chosen = app.get_subcommands();
        out << (chosen.empty() ? app.help() : chosen.front()->help());
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const std::string hint = usage_hint(app, args);
        err << "flowpix: " << (hint.empty() ? std::string(e.what()) : hint) << '\n';
        err << "run 'flowpix --help' for the grammar\n";
        return kExitUsage;
    }

    ctx.command = app.get_subcommands().front();
    try {
        return handlers.at(ctx.command->get_name())(ctx);
    } catch (const UsageError& e) {
        err << "flowpix " << ctx.command->get_name() << ": " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "flowpix " << ctx.command->get_name() << ": " << e.what() << '\n';
        return e.kind() == ErrorKind::invalid_argument ? kExitUsage : kExitData;
    } catch (const std::exception& e) {
        err << "flowpix " << ctx.command->get_name() << ": " << e.what() << '\n';
        return kExitData;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace flowpix::cli
