#include "flowpix/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "flowpix/error.hpp"
#include "flowpix/rng.hpp"
#include "flowpix/util.hpp"

namespace flowpix {

LabeledTable parse_csv(std::string_view text, const std::string& source, const LoadOptions& options,
                       const FeatureSchema* schema) {
    LabeledTable table;
    table.source = source;
    table.split = options.split;
    table.label_column = options.label_column;
    const std::string stem = std::filesystem::path(source).stem().string();

    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        while (pos < text.size()) {
            const std::size_t end = std::min(text.find('\n', pos), text.size());
            line = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (!trim(line).empty()) return true;
        }
        return false;
    };

    std::string_view line;
    if (!next_line(line)) throw Error(ErrorKind::format, source + ": missing header row");
    std::vector<std::string> names;
    for (auto& field : split_csv_line(line)) names.emplace_back(trim(field));
    table.header = std::make_shared<const Header>(std::move(names));
    const auto label_index = table.header->find(options.label_column);
    if (!label_index) {
        throw Error(ErrorKind::format,
                    source + ": label column '" + options.label_column + "' not in header");
    }
    const auto binary_index = options.binary_column.empty()
                                  ? std::nullopt
                                  : table.header->find(options.binary_column);

    std::map<std::string, std::size_t> schema_classes;
    if (schema) {
        for (std::size_t c = 0; c < schema->class_names.size(); ++c) {
            schema_classes.emplace(schema->class_names[c], c);
        }
    }

    std::size_t data_row = 0;
    while (next_line(line)) {
        const std::size_t row = data_row++;
        auto fields = split_csv_line(line);
        if (fields.size() != table.header->size()) {
            table.issues.push_back({line_no, "expected " + std::to_string(table.header->size()) +
                                                 " fields, found " + std::to_string(fields.size())});
            continue;
        }
        std::string label(trim(fields[*label_index]));
        if (label.empty()) {
            table.issues.push_back({line_no, "empty label"});
            continue;
        }
        if (binary_index) {
            const std::string_view binary = trim(fields[*binary_index]);
            const std::string_view expected = label == kNormalClass ? "0" : "1";
            if (binary != expected) {
                throw Error(ErrorKind::format, source + " line " + std::to_string(line_no) + ": " +
                                                   options.binary_column + "=" +
                                                   std::string(binary) + " contradicts " +
                                                   options.label_column + "=" + label);
            }
        }
        if (schema && !schema_classes.count(label)) {
            table.issues.push_back({line_no, "class '" + label + "' not in schema"});
            continue;
        }
        FlowRecord record;
        record.header = table.header;
        record.values = std::move(fields);
        record.label = std::move(label);
        record.record_id = stem + "-" + std::to_string(row);
        table.records.push_back(std::move(record));
    }

    if (schema) {
        table.class_names = schema->class_names;
    } else {
        std::vector<std::string> labels;
        labels.reserve(table.records.size());
        for (const auto& r : table.records) labels.push_back(r.label);
        table.class_names = canonical_class_order(std::move(labels));
    }
    std::map<std::string, std::size_t> class_index;
    for (std::size_t c = 0; c < table.class_names.size(); ++c) {
        class_index.emplace(table.class_names[c], c);
    }
    for (auto& r : table.records) r.class_index = class_index.at(r.label);
    table.recount();
    return table;
}

LabeledTable load_csv(const std::string& path, const LoadOptions& options,
                      const FeatureSchema* schema) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::io, "no such file: " + path);
    return parse_csv(read_file(path), path, options, schema);
}

std::string serialize_csv(const LabeledTable& table) {
    std::ostringstream out;
    std::vector<std::string> escaped;
    for (const auto& name : table.header->names()) escaped.push_back(csv_escape(name));
    out << join(escaped, ",") << '\n';
    for (const auto& r : table.records) {
        escaped.clear();
        for (const auto& v : r.values) escaped.push_back(csv_escape(v));
        out << join(escaped, ",") << '\n';
    }
    return out.str();
}

void save_csv(const LabeledTable& table, const std::string& path) {
    write_file(path, serialize_csv(table));
}

std::size_t ClassCounts::count(std::string_view class_name) const {
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        if (class_names[c] == class_name) return counts[c];
    }
    return 0;
}

ClassCounts class_counts(const LabeledTable& table) {
    ClassCounts out;
    out.class_names = table.class_names;
    out.counts.assign(table.class_names.size(), 0);
    for (const auto& r : table.records) ++out.counts.at(r.class_index);
    for (std::size_t c = 0; c < out.counts.size(); ++c) {
        (out.class_names[c] == kNormalClass ? out.normal : out.attack) += out.counts[c];
    }
    return out;
}

std::string count_report(const LabeledTable& train, const LabeledTable& test) {
    const ClassCounts a = class_counts(train);
    const ClassCounts b = class_counts(test);
    std::vector<std::string> names = a.class_names;
    for (const auto& n : b.class_names) {
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
    std::ostringstream out;
    out << "class,train_count,test_count\n";
    for (const auto& n : names) out << csv_escape(n) << ',' << a.count(n) << ',' << b.count(n) << '\n';
    out << "Attack," << a.attack << ',' << b.attack << '\n';
    out << "Total," << a.total() << ',' << b.total() << '\n';
    return out.str();
}

LabeledTable to_binary(const LabeledTable& table) {
    LabeledTable out = table;
    out.class_names = {std::string(kNormalClass), "Attack"};
    for (auto& r : out.records) r.class_index = table.class_names[r.class_index] == kNormalClass ? 0 : 1;
    out.recount();
    return out;
}

namespace {

LabeledTable with_records(const LabeledTable& table, const std::vector<std::size_t>& indices) {
    LabeledTable out;
    out.source = table.source;
    out.split = table.split;
    out.header = table.header;
    out.label_column = table.label_column;
    out.class_names = table.class_names;
    out.records.reserve(indices.size());
    for (const std::size_t i : indices) out.records.push_back(table.records[i]);
    out.recount();
    return out;
}

std::vector<std::vector<std::size_t>> indices_by_class(const LabeledTable& table) {
    std::vector<std::vector<std::size_t>> by_class(table.class_names.size());
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        by_class.at(table.records[i].class_index).push_back(i);
    }
    return by_class;
}

}  // namespace

LabeledTable stratified_sample(const LabeledTable& table, const std::vector<std::size_t>& quotas,
                               std::uint64_t seed) {
    if (quotas.size() != table.class_names.size()) {
        throw Error(ErrorKind::invalid_argument, "one quota per class required");
    }
    auto by_class = indices_by_class(table);
    std::vector<std::size_t> chosen;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& pool = by_class[c];
        const std::size_t take = std::min(quotas[c], pool.size());
        Rng rng(derive_seed(seed, streams::stratified, c));
        // Partial Fisher-Yates: the first `take` slots become the sample.
        for (std::size_t i = 0; i < take; ++i) {
            std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
        }
        std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return with_records(table, chosen);
}

LabeledTable stratified_sample(const LabeledTable& table, std::size_t per_class, std::uint64_t seed) {
    if (per_class < 1) throw Error(ErrorKind::invalid_argument, "per_class must be at least 1");
    return stratified_sample(table, std::vector<std::size_t>(table.class_names.size(), per_class),
                             seed);
}

void SubsetPlan::validate() const {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "holdout fraction must lie strictly in (0, 1)");
    }
    if (per_class_cap < 1) throw Error(ErrorKind::invalid_argument, "per-class cap must be >= 1");
}

BalancedSubset make_balanced_subset(const LabeledTable& table, const SubsetPlan& plan) {
    plan.validate();
    auto by_class = indices_by_class(table);
    std::vector<std::size_t> train;
    std::vector<std::size_t> holdout;
    BalancedSubset out;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto pool = by_class[c];
        if (pool.empty()) continue;
        Rng rng(derive_seed(plan.seed, streams::subset, c));
        rng.shuffle(pool);
        pool.resize(std::min(pool.size(), plan.per_class_cap));
        if (pool.size() < 2) {
            out.flagged.push_back(table.class_names[c]);
            train.insert(train.end(), pool.begin(), pool.end());
            continue;
        }
        const auto wanted = round_half_away(plan.holdout_fraction * static_cast<double>(pool.size()));
        const auto n_holdout = static_cast<std::size_t>(
            std::clamp<long long>(wanted, 1, static_cast<long long>(pool.size()) - 1));
        auto split_at = pool.begin() + static_cast<std::ptrdiff_t>(n_holdout);
        std::sort(pool.begin(), split_at);
        std::sort(split_at, pool.end());
        holdout.insert(holdout.end(), pool.begin(), split_at);
        train.insert(train.end(), split_at, pool.end());
    }
    out.train = with_records(table, train);
    out.holdout = with_records(table, holdout);
    return out;
}

const std::vector<std::string>& unsw_class_names() {
    static const std::vector<std::string> names = {
        "Normal",  "Analysis", "Backdoor",       "DoS",       "Exploits",
        "Fuzzers", "Generic",  "Reconnaissance", "Shellcode", "Worms"};
    return names;
}

const std::vector<std::size_t>& unsw_train_counts() {
    static const std::vector<std::size_t> counts = {37000, 677,   583,  4089, 11132,
                                                    6062,  18871, 3496, 378,  44};
    return counts;
}

const std::vector<std::string>& unsw_services() {
    static const std::vector<std::string> v = {"-",    "dhcp",   "dns",  "ftp", "ftp-data",
                                               "http", "irc",    "pop3", "radius", "smtp",
                                               "snmp", "ssh",    "ssl"};
    return v;
}

const std::vector<std::string>& unsw_states() {
    static const std::vector<std::string> v = {"ACC", "CLO", "CON", "FIN", "INT", "REQ", "RST"};
    return v;
}

const std::vector<std::string>& unsw_protocols() {
    static const std::vector<std::string> v = {
        "3pc",       "a/n",        "aes-sp3-d", "any",        "argus",     "aris",
        "arp",       "ax.25",      "bbn-rcc",   "bna",        "br-sat-mon", "cbt",
        "cftp",      "chaos",      "compaq-peer", "cphb",     "cpnx",      "crtp",
        "crudp",     "dcn",        "ddp",       "ddx",        "dgp",       "egp",
        "eigrp",     "emcon",      "encap",     "etherip",    "fc",        "fire",
        "ggp",       "gmtp",       "gre",       "hmp",        "i-nlsp",    "iatp",
        "ib",        "idpr",       "idpr-cmtp", "idrp",       "ifmp",      "igmp",
        "igp",       "il",         "ip",        "ipcomp",     "ipcv",      "ipip",
        "iplt",      "ipnip",      "ippc",      "ipv6",       "ipv6-frag", "ipv6-no",
        "ipv6-opts", "ipv6-route", "ipx-n-ip",  "irtp",       "isis",      "iso-ip",
        "iso-tp4",   "kryptolan",  "l2tp",      "larp",       "leaf-1",    "leaf-2",
        "merit-inp", "mfe-nsp",    "mhrp",      "micp",       "mobile",    "mtp",
        "mux",       "narp",       "netblt",    "nsfnet-igp", "nvp",       "ospf",
        "pgm",       "pim",        "pipe",      "pnni",       "pri-enc",   "prm",
        "ptp",       "pup",        "pvp",       "qnx",        "rdp",       "rsvp",
        "rvd",       "sat-expak",  "sat-mon",   "sccopmce",   "scps",      "sctp",
        "sdrp",      "secure-vmtp", "sep",      "skip",       "sm",        "smp",
        "snp",       "sprite-rpc", "sps",       "srp",        "st2",       "stp",
        "sun-nd",    "swipe",      "tcf",       "tcp",        "tlsp",      "tp++",
        "trunk-1",   "trunk-2",    "ttp",       "udp",        "unas",      "uti",
        "vines",     "visa",       "vmtp",      "vrrp",       "wb-expak",  "wb-mon",
        "wsn",       "xnet",       "xns-idp",   "xtp",        "zero"};
    return v;
}

FixtureShape FixtureShape::small() {
    FixtureShape shape;
    for (int i = 0; i < 6; ++i) {
        shape.columns.push_back({"f" + std::to_string(i), FeatureKind::numeric, {}, i < 3});
    }
    shape.columns.push_back({"proto", FeatureKind::categorical, {"icmp", "sctp", "tcp", "udp", "zero"}, false});
    shape.columns.push_back({"service", FeatureKind::categorical, {"-", "dns", "ftp", "http"}, false});
    shape.columns.push_back({"state", FeatureKind::categorical, {"CON", "FIN", "INT"}, false});
    return shape;
}

FixtureShape FixtureShape::unsw() {
    static const std::vector<std::string> numeric = {
        "spkts",           "dpkts",           "sbytes",       "dbytes",           "rate",
        "sttl",            "dttl",            "sload",        "dload",            "sloss",
        "dloss",           "sinpkt",          "dinpkt",       "sjit",             "djit",
        "swin",            "stcpb",           "dtcpb",        "dwin",             "tcprtt",
        "synack",          "ackdat",          "smean",        "dmean",            "trans_depth",
        "response_body_len", "ct_srv_src",    "ct_state_ttl", "ct_dst_ltm",       "ct_src_dport_ltm",
        "ct_dst_sport_ltm", "ct_dst_src_ltm", "is_ftp_login", "ct_ftp_cmd",       "ct_flw_http_mthd",
        "ct_src_ltm",      "ct_srv_dst",      "is_sm_ips_ports"};
    const auto separated = [](const std::string& name) {
        return name == "sttl" || name == "ct_state_ttl" || name == "ct_dst_src_ltm";
    };
    FixtureShape shape;
    shape.columns.push_back({"dur", FeatureKind::numeric, {}, false});
    shape.columns.push_back({"proto", FeatureKind::categorical, unsw_protocols(), false});
    shape.columns.push_back({"service", FeatureKind::categorical, unsw_services(), false});
    shape.columns.push_back({"state", FeatureKind::categorical, unsw_states(), false});
    for (const auto& name : numeric) {
        shape.columns.push_back({name, FeatureKind::numeric, {}, separated(name)});
    }
    return shape;
}

namespace {

double truncated_normal(Rng& rng) {
    for (;;) {
        const double z = rng.normal();
        if (std::abs(z) <= 4.0) return z;
    }
}

std::string fixture_value(double value) {
    return format_double(static_cast<double>(round_half_away(value * 1000.0)) / 1000.0);
}

}  // namespace

LabeledTable synth_fixture(std::uint64_t seed, const std::vector<std::size_t>& per_class_counts,
                           const FixtureShape& shape, Split split) {
    if (per_class_counts.size() < 2) {
        throw Error(ErrorKind::invalid_argument, "a fixture needs at least two classes");
    }
    std::vector<std::string> class_names;
    for (std::size_t c = 0; c < per_class_counts.size(); ++c) {
        if (c < unsw_class_names().size()) {
            class_names.push_back(unsw_class_names()[c]);
        } else {
            class_names.push_back("Family" + std::to_string(c));
        }
    }

    std::vector<std::string> header = {"id"};
    for (const auto& col : shape.columns) header.push_back(col.name);
    header.emplace_back(kUnswLabelColumn);
    header.emplace_back(kUnswBinaryColumn);

    LabeledTable table;
    table.source = "fixture-s" + std::to_string(seed);
    table.split = split;
    table.header = std::make_shared<const Header>(std::move(header));
    table.label_column = std::string(kUnswLabelColumn);
    table.class_names = class_names;

    Rng rng(derive_seed(seed, streams::fixture));
    std::size_t row = 0;
    for (std::size_t c = 0; c < per_class_counts.size(); ++c) {
        if (per_class_counts[c] < 1) {
            throw Error(ErrorKind::invalid_argument, "every fixture class needs a record");
        }
        for (std::size_t k = 0; k < per_class_counts[c]; ++k, ++row) {
            FlowRecord record;
            record.header = table.header;
            record.values.push_back(std::to_string(row + 1));
            for (const auto& col : shape.columns) {
                if (col.kind == FeatureKind::categorical) {
                    const std::size_t v = col.vocab.size();
                    std::size_t pick = 0;
                    if (row < v) {
                        pick = row;
                    } else if (rng.uniform01() < shape.category_bias) {
                        pick = c % v;
                    } else {
                        pick = rng.uniform_index(v);
                    }
                    record.values.push_back(col.vocab[pick]);
                } else if (col.separated) {
                    const double mean = 50.0 + shape.separation * static_cast<double>(c);
                    record.values.push_back(fixture_value(mean + truncated_normal(rng)));
                } else {
                    record.values.push_back(fixture_value(20.0 + 5.0 * truncated_normal(rng)));
                }
            }
            record.values.push_back(class_names[c]);
            record.values.push_back(class_names[c] == kNormalClass ? "0" : "1");
            record.label = class_names[c];
            record.class_index = c;
            record.record_id = table.source + "-" + std::to_string(row);
            table.records.push_back(std::move(record));
        }
    }
    table.recount();
    return table;
}

LabeledTable synth_fixture(std::uint64_t seed, std::size_t n_per_class, std::size_t n_classes,
                           const FixtureShape& shape, Split split) {
    if (n_per_class < 1 || n_classes < 2) {
        throw Error(ErrorKind::invalid_argument, "need n_per_class >= 1 and n_classes >= 2");
    }
    return synth_fixture(seed, std::vector<std::size_t>(n_classes, n_per_class), shape, split);
}

}  // namespace flowpix
