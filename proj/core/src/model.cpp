#include "handwash/model.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "handwash/errors.hpp"
#include "handwash/preprocess.hpp"

namespace handwash {

using nlohmann::json;

namespace {

std::string checksum_to_hex(std::uint64_t checksum) {
    std::ostringstream out;
    out << "0x" << std::hex << std::setw(16) << std::setfill('0') << checksum;
    return out.str();
}

std::uint64_t checksum_from_hex(const std::string& hex) {
    if (hex.rfind("0x", 0) != 0) throw ParseError("malformed checksum: " + hex);
    return std::stoull(hex.substr(2), nullptr, 16);
}

json preprocess_to_json(const PreprocessSpec& p) {
    return json{{"height", p.target_height},
                {"width", p.target_width},
                {"channel_means", p.channel_means},
                {"channel_order", to_string(p.channel_order)}};
}

PreprocessSpec preprocess_from_json(const json& j) {
    PreprocessSpec p;
    p.target_height = j.at("height").get<int>();
    p.target_width = j.at("width").get<int>();
    const auto means = j.at("channel_means").get<std::vector<double>>();
    if (means.size() != 3) throw ParseError("channel_means must hold 3 values");
    std::copy(means.begin(), means.end(), p.channel_means.begin());
    p.channel_order = channel_order_from_string(j.at("channel_order").get<std::string>());
    return p;
}

}  // namespace

TransferModel::TransferModel(std::unique_ptr<Backbone> backbone, ClassifierHead head,
                             LabelRegistry labels)
    : backbone_(std::move(backbone)), head_(std::move(head)), labels_(std::move(labels)) {}

TransferModel TransferModel::assemble(const BackboneSpec& backbone_spec,
                                      const HeadSpec& head_spec,
                                      const LabelRegistry& labels) {
    if (head_spec.num_classes < 2)
        throw ConfigError("a classifier needs at least 2 classes");
    if (head_spec.num_classes != labels.size())
        throw ConfigError("head num_classes " + std::to_string(head_spec.num_classes) +
                          " does not match registry size " + std::to_string(labels.size()));

    auto backbone = make_backbone(backbone_spec);
    ClassifierHead head(head_spec, backbone->spec().feature_dim);
    TransferModel model(std::move(backbone), std::move(head), labels);
    model.freeze_backbone();
    return model;
}

std::int64_t TransferModel::trainable_parameter_count() const {
    std::int64_t count = head_.parameter_count();
    if (!backbone_frozen_) count += backbone_->parameter_count();
    return count;
}

Eigen::MatrixXd TransferModel::extract_features(const std::vector<cv::Mat>& preprocessed) const {
    return backbone_->extract_batch(preprocessed);
}

Eigen::MatrixXd TransferModel::forward(const std::vector<cv::Mat>& preprocessed) const {
    if (preprocessed.empty()) return Eigen::MatrixXd(0, head_.spec().num_classes);
    return head_.forward(extract_features(preprocessed));
}

void TransferModel::save_checkpoint(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory: " + dir.string());

    const BackboneSpec& b = backbone_->spec();
    json doc{{"schema_version", 1},
             {"backbone",
              {{"kind", to_string(b.kind)},
               {"feature_dim", b.feature_dim},
               {"input", preprocess_to_json(b.input)}}},
             {"head",
              {{"hidden_sizes", head_.spec().hidden_sizes},
               {"dropout_rate", head_.spec().dropout_rate},
               {"num_classes", head_.spec().num_classes},
               {"init_seed", head_.spec().init_seed}}},
             {"labels", labels_.names()},
             {"backbone_checksum", checksum_to_hex(backbone_->checksum())},
             {"backbone_frozen", backbone_frozen_}};

    std::ofstream spec_out(dir / "spec.json");
    if (!spec_out) throw IoError("cannot write " + (dir / "spec.json").string());
    spec_out << doc.dump(2) << '\n';

    std::ofstream params_out(dir / "head_params.bin", std::ios::binary);
    if (!params_out) throw IoError("cannot write " + (dir / "head_params.bin").string());
    head_.save_params(params_out);
}

TransferModel TransferModel::load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream spec_in(dir / "spec.json");
    if (!spec_in) throw IoError("cannot read " + (dir / "spec.json").string());
    json doc;
    try {
        spec_in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed checkpoint spec: ") + e.what());
    }

    try {
        BackboneSpec backbone_spec;
        const json& b = doc.at("backbone");
        backbone_spec.kind = backbone_kind_from_string(b.at("kind").get<std::string>());
        backbone_spec.feature_dim = b.at("feature_dim").get<int>();
        backbone_spec.input = preprocess_from_json(b.at("input"));

        HeadSpec head_spec;
        const json& h = doc.at("head");
        head_spec.hidden_sizes = h.at("hidden_sizes").get<std::vector<int>>();
        head_spec.dropout_rate = h.at("dropout_rate").get<double>();
        head_spec.num_classes = h.at("num_classes").get<int>();
        head_spec.init_seed = h.at("init_seed").get<std::uint64_t>();

        LabelRegistry labels(doc.at("labels").get<std::vector<std::string>>());

        TransferModel model = assemble(backbone_spec, head_spec, labels);

        // A checkpoint is only valid against the exact weights it was trained
        // over; a cache swap must fail loudly rather than predict nonsense.
        const auto stored = checksum_from_hex(doc.at("backbone_checksum").get<std::string>());
        if (stored != model.backbone_checksum())
            throw ConfigError("backbone weights changed since this checkpoint was written");

        std::ifstream params_in(dir / "head_params.bin", std::ios::binary);
        if (!params_in) throw IoError("cannot read " + (dir / "head_params.bin").string());
        model.head().load_params(params_in);
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed checkpoint spec: ") + e.what());
    }
}

}  // namespace handwash
