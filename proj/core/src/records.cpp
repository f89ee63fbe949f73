#include "softlabel/records.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "softlabel/error.hpp"

namespace softlabel {

using nlohmann::json;

namespace {

const json& field(const json& j, const std::string& name) {
    if (!j.is_object()) throw DataError("record is not a JSON object");
    auto it = j.find(name);
    if (it == j.end()) throw DataError("missing field '" + name + "'");
    return *it;
}

std::string string_field(const json& j, const std::string& name) {
    const json& v = field(j, name);
    if (!v.is_string()) throw DataError("field '" + name + "' must be a string");
    return v.get<std::string>();
}

std::string id_field(const json& j, const std::string& name) {
    const json& v = field(j, name);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw DataError("field '" + name + "' must be a string or integer");
}

const AttributeSchema& schema_for_size(Attribute a, std::size_t size) {
    if (a == Attribute::Target && size == target_schema_full().size()) return target_schema_full();
    return task_schema(a);
}

int category_value(const json& v, const AttributeSchema& schema, const std::string& where) {
    if (v.is_string()) {
        try {
            return schema.index_of(v.get<std::string>());
        } catch (const DataError& e) {
            throw DataError("field '" + where + "': " + e.what());
        }
    }
    if (v.is_number_integer()) {
        const auto i = v.get<long long>();
        if (i < 0 || i >= static_cast<long long>(schema.size()))
            throw DataError("field '" + where + "': category index " + std::to_string(i) + " out of range");
        return static_cast<int>(i);
    }
    throw DataError("field '" + where + "' must be a category name or index");
}

std::vector<double> double_array(const json& v, const std::string& where) {
    if (!v.is_array()) throw DataError("field '" + where + "' must be an array");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw DataError("field '" + where + "' must contain numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

json kappa_json(const KappaResult& k) { return {{"kappa", k.kappa}, {"degenerate", k.degenerate}}; }

template <typename T, typename F>
std::vector<T> read_all(const std::filesystem::path& path, F convert) {
    const auto rows = read_jsonl(path);
    std::vector<T> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        try {
            out.push_back(convert(rows[i]));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

json to_json(const Tweet& tweet) {
    json j = {{"id", tweet.id},
              {"raw_text", tweet.raw_text},
              {"month", tweet.month},
              {"category", std::string(to_string(tweet.category))}};
    if (!tweet.text.empty()) j["text"] = tweet.text;
    return j;
}

Tweet tweet_from_json(const json& j) {
    Tweet t;
    t.id = id_field(j, "id");
    t.raw_text = string_field(j, "raw_text");
    t.month = j.contains("month") ? string_field(j, "month") : std::string();
    if (j.contains("category") && !j["category"].is_null()) {
        try {
            t.category = parse_tweet_category(string_field(j, "category"));
        } catch (const UsageError& e) {
            throw DataError(std::string("field 'category': ") + e.what());
        }
    }
    if (j.contains("text")) t.text = string_field(j, "text");
    return t;
}

json to_json(const AnnotationRecord& record) {
    json votes = json::object();
    for (auto a : kAttributes) {
        const auto& schema = a == Attribute::Target ? target_schema_full() : task_schema(a);
        json arr = json::array();
        for (int v : record.of(a)) arr.push_back(schema.name(v));
        votes[std::string(to_string(a))] = std::move(arr);
    }
    return {{"tweet_id", record.tweet_id}, {"votes", std::move(votes)}};
}

AnnotationRecord annotation_record_from_json(const json& j) {
    AnnotationRecord r;
    r.tweet_id = id_field(j, "tweet_id");
    const json& votes = field(j, "votes");
    if (!votes.is_object()) throw DataError("field 'votes' must be an object");
    for (auto a : kAttributes) {
        const std::string name(to_string(a));
        const std::string where = "votes." + name;
        auto it = votes.find(name);
        if (it == votes.end()) throw DataError("missing field '" + where + "'");
        if (!it->is_array()) throw DataError("field '" + where + "' must be an array");
        const auto& schema = a == Attribute::Target ? target_schema_full() : task_schema(a);
        for (const auto& v : *it) r.of(a).push_back(category_value(v, schema, where));
    }
    try {
        validate_record(r);
    } catch (const DataError& e) {
        throw DataError("field 'votes': " + std::string(e.what()));
    }
    return r;
}

json to_json(const LabeledExample& example) {
    json labels = json::object();
    for (auto a : kAttributes) {
        const auto& l = example.of(a);
        const auto& schema = schema_for_size(a, l.soft.size());
        labels[std::string(to_string(a))] = {{"soft", l.soft},
                                            {"silver", schema.name(l.silver)},
                                            {"class", std::string(to_string(l.annot_class))}};
    }
    return {{"tweet_id", example.tweet_id}, {"labels", std::move(labels)}};
}

LabeledExample labeled_example_from_json(const json& j) {
    LabeledExample ex;
    ex.tweet_id = id_field(j, "tweet_id");
    const json& labels = field(j, "labels");
    for (auto a : kAttributes) {
        const std::string name(to_string(a));
        const std::string where = "labels." + name;
        auto it = labels.find(name);
        if (it == labels.end()) throw DataError("missing field '" + where + "'");
        auto& l = ex.of(a);
        l.soft = double_array(field(*it, "soft"), where + ".soft");
        const auto& schema = schema_for_size(a, l.soft.size());
        if (l.soft.size() != schema.size())
            throw DataError("field '" + where + ".soft' has " + std::to_string(l.soft.size()) + " entries, expected " +
                            std::to_string(schema.size()));
        l.silver = category_value(field(*it, "silver"), schema, where + ".silver");
        const std::string cls = it->contains("class") ? string_field(*it, "class") : "A";
        if (cls == "A") l.annot_class = AnnotationClass::A;
        else if (cls == "B") l.annot_class = AnnotationClass::B;
        else if (cls == "C") l.annot_class = AnnotationClass::C;
        else throw DataError("field '" + where + ".class' must be A, B or C");
    }
    return ex;
}

json to_json(const CorpusStats& stats) {
    json attrs = json::object();
    for (const auto& s : stats.attributes) {
        json cross = json::object();
        const auto& schema = task_schema(s.attribute);
        for (std::size_t c = 0; c < s.class_cross_tab.size(); ++c)
            cross[schema.name(static_cast<int>(c))] = {
                {"A", s.class_cross_tab[c][0]}, {"B", s.class_cross_tab[c][1]}, {"C", s.class_cross_tab[c][2]}};
        json counts = json::object(), adjusted = json::object();
        for (std::size_t c = 0; c < s.counts.size(); ++c) counts[s.categories[c]] = s.counts[c];
        for (std::size_t c = 0; c < s.adjusted_counts.size(); ++c)
            adjusted[schema.name(static_cast<int>(c))] = s.adjusted_counts[c];
        attrs[std::string(to_string(s.attribute))] = {{"kappa", kappa_json(s.kappa)},
                                                      {"counts", std::move(counts)},
                                                      {"adjusted_counts", std::move(adjusted)},
                                                      {"class_cross_tab", std::move(cross)}};
    }
    return {{"input_records", stats.input_records},
            {"retained_records", stats.retained_records},
            {"repaired_votes", stats.repaired_votes},
            {"annotators", stats.annotators},
            {"target_kappa_full", kappa_json(stats.target_kappa_full)},
            {"attributes", std::move(attrs)}};
}

json to_json(const TrueLabel& truth) {
    json labels = json::object();
    for (auto a : kAttributes) {
        const auto& schema = a == Attribute::Target ? target_schema_full() : task_schema(a);
        labels[std::string(to_string(a))] = schema.name(truth.of(a));
    }
    return {{"tweet_id", truth.tweet_id}, {"labels", std::move(labels)}};
}

TrueLabel true_label_from_json(const json& j) {
    TrueLabel t;
    t.tweet_id = id_field(j, "tweet_id");
    const json& labels = field(j, "labels");
    for (auto a : kAttributes) {
        const std::string name(to_string(a));
        const auto& schema = a == Attribute::Target ? target_schema_full() : task_schema(a);
        t.labels[static_cast<int>(a)] = category_value(field(labels, name), schema, "labels." + name);
    }
    return t;
}

json to_json(const PredictionRecord& record) {
    json pred = json::object(), probs = json::object();
    for (std::size_t t = 0; t < record.attributes.size(); ++t) {
        const std::string name(to_string(record.attributes[t]));
        pred[name] = task_schema(record.attributes[t]).name(record.predicted[t]);
        if (t < record.probabilities.size()) probs[name] = record.probabilities[t];
    }
    json j = {{"tweet_id", record.tweet_id}, {"predictions", std::move(pred)}};
    if (!record.probabilities.empty()) j["probabilities"] = std::move(probs);
    return j;
}

PredictionRecord prediction_record_from_json(const json& j) {
    PredictionRecord r;
    r.tweet_id = id_field(j, "tweet_id");
    const json& pred = field(j, "predictions");
    if (!pred.is_object() || pred.empty()) throw DataError("field 'predictions' must be a non-empty object");
    const json* probs = j.contains("probabilities") ? &j["probabilities"] : nullptr;
    for (auto a : kAttributes) {
        const std::string name(to_string(a));
        auto it = pred.find(name);
        if (it == pred.end()) continue;
        r.attributes.push_back(a);
        r.predicted.push_back(category_value(*it, task_schema(a), "predictions." + name));
        if (probs) r.probabilities.push_back(double_array(field(*probs, name), "probabilities." + name));
    }
    for (auto it = pred.begin(); it != pred.end(); ++it) {
        bool known = false;
        for (auto a : kAttributes) known = known || it.key() == to_string(a);
        if (!known) throw DataError("field 'predictions." + it.key() + "': unknown task");
    }
    return r;
}

std::vector<json> read_jsonl(std::istream& in, const std::string& source) {
    std::vector<json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw DataError(source + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
    }
    return rows;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return read_jsonl(in, path.string());
}

void write_jsonl(std::ostream& out, const std::vector<json>& rows) {
    for (const auto& r : rows) out << r.dump() << '\n';
}

std::string jsonl_string(const std::vector<json>& rows) {
    std::ostringstream out;
    write_jsonl(out, rows);
    return out.str();
}

std::vector<Tweet> read_tweets(const std::filesystem::path& path) {
    return read_all<Tweet>(path, tweet_from_json);
}
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
    return read_all<AnnotationRecord>(path, annotation_record_from_json);
}
std::vector<LabeledExample> read_labeled(const std::filesystem::path& path) {
    return read_all<LabeledExample>(path, labeled_example_from_json);
}
std::vector<TrueLabel> read_truth(const std::filesystem::path& path) {
    return read_all<TrueLabel>(path, true_label_from_json);
}
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
    return read_all<PredictionRecord>(path, prediction_record_from_json);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out << contents;
        if (!out.flush()) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::unordered_map<std::string, std::string> tweet_texts(const std::vector<Tweet>& tweets,
                                                         const Normalizer& normalizer) {
    std::unordered_map<std::string, std::string> out;
    out.reserve(tweets.size());
    for (const auto& t : tweets) out[t.id] = t.text.empty() ? normalizer.normalize(t.raw_text) : t.text;
    return out;
}

std::string checksum(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace softlabel
