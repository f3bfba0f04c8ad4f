#include "canseg/config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "canseg/errors.h"

namespace canseg {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !in.eof())
    throw InvalidArgument("bad value '" + text + "' for " + key);
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidArgument("bad boolean '" + text + "' for " + key);
}

std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "adadelta"; }

OptimizerKind parse_optimizer(const std::string& text) {
  if (text == "adam") return OptimizerKind::kAdam;
  if (text == "adadelta") return OptimizerKind::kAdadelta;
  throw InvalidArgument("unknown optimizer '" + text + "' (valid: adam, adadelta)");
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kSeq2Seq:
      return "s2s";
    case ModelKind::kPGNet:
      return "pgnet";
    case ModelKind::kTransducer:
      return "il";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "s2s") return ModelKind::kSeq2Seq;
  if (text == "pgnet") return ModelKind::kPGNet;
  if (text == "il" || text == "transducer") return ModelKind::kTransducer;
  throw InvalidArgument("unknown model kind '" + std::string(text) + "' (valid: s2s, pgnet, il)");
}

std::string to_string(Regime regime) { return regime == Regime::kHigh ? "high" : "low"; }

Regime parse_regime(std::string_view text) {
  if (text == "high") return Regime::kHigh;
  if (text == "low") return Regime::kLow;
  throw InvalidArgument("unknown regime '" + std::string(text) + "' (valid: high, low)");
}

TrainConfig TrainConfig::defaults(ModelKind kind, Regime regime) {
  TrainConfig c;
  c.kind = kind;
  c.regime = regime;
  const bool low = regime == Regime::kLow;
  switch (kind) {
    case ModelKind::kSeq2Seq:
      c.embedding_size = 300;
      c.encoder_hidden = 100;
      c.decoder_hidden = 100;
      c.attention_size = 100;
      c.dropout = 0.3;
      c.optimizer = OptimizerKind::kAdadelta;
      c.learning_rate = 1.0;
      c.batch_size = 20;
      c.epochs = low ? 300 : 100;
      c.patience = low ? 100 : 10;
      c.beam_width = 1;
      break;
    case ModelKind::kPGNet:
      c.embedding_size = 100;
      c.encoder_hidden = 100;
      c.decoder_hidden = 100;
      c.attention_size = 100;
      c.dropout = low ? 0.5 : 0.3;
      c.optimizer = OptimizerKind::kAdam;
      c.learning_rate = 0.001;
      c.batch_size = 32;
      c.epochs = low ? 300 : 100;
      c.patience = low ? 100 : 10;
      c.beam_width = 1;
      break;
    case ModelKind::kTransducer:
      c.embedding_size = 100;
      c.action_embedding_size = 100;
      c.encoder_hidden = 200;
      c.decoder_hidden = 200;
      c.dropout = 0.5;
      c.optimizer = OptimizerKind::kAdadelta;
      c.learning_rate = 0.1;
      c.adadelta_uses_learning_rate = false;
      c.batch_size = 1;
      c.epochs = 30;
      c.patience = 10;
      c.beam_width = 4;
      c.schedule_k = 12.0;
      break;
  }
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"model", canseg::to_string(kind)},
          {"regime", canseg::to_string(regime)},
          {"embedding_size", embedding_size},
          {"encoder_hidden", encoder_hidden},
          {"decoder_hidden", decoder_hidden},
          {"attention_size", attention_size},
          {"action_embedding_size", action_embedding_size},
          {"dropout", dropout},
          {"optimizer", optimizer_name(optimizer)},
          {"learning_rate", learning_rate},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_epsilon", adam_epsilon},
          {"adadelta_rho", adadelta_rho},
          {"adadelta_epsilon", adadelta_epsilon},
          {"adadelta_uses_learning_rate", adadelta_uses_learning_rate},
          {"clip_norm", clip_norm},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"patience", patience},
          {"stop_at_perfect_dev", stop_at_perfect_dev},
          {"beam_width", beam_width},
          {"dev_beam_width", dev_beam_width},
          {"schedule_k", schedule_k},
          {"cap_margin", cap_margin},
          {"cap_factor", cap_factor},
          {"cap_offset", cap_offset},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  const auto kind = parse_model_kind(doc.value("model", std::string("pgnet")));
  const auto regime = parse_regime(doc.value("regime", std::string("high")));
  TrainConfig c = defaults(kind, regime);
  for (const auto& [key, value] : doc.items()) {
    if (key == "model" || key == "regime") continue;
    c.set(key, value.is_string() ? value.get<std::string>() : value.dump());
  }
  return c;
}

void TrainConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto as_int = [&] { return parse_number<int>(key, value); };
  auto as_double = [&] { return parse_number<double>(key, value); };
  if (key == "model") {
    kind = parse_model_kind(value);
  } else if (key == "regime") {
    regime = parse_regime(value);
  } else if (key == "embedding_size") {
    embedding_size = as_int();
  } else if (key == "encoder_hidden") {
    encoder_hidden = as_int();
  } else if (key == "decoder_hidden") {
    decoder_hidden = as_int();
  } else if (key == "attention_size") {
    attention_size = as_int();
  } else if (key == "action_embedding_size") {
    action_embedding_size = as_int();
  } else if (key == "dropout") {
    dropout = as_double();
  } else if (key == "optimizer") {
    optimizer = parse_optimizer(value);
  } else if (key == "learning_rate") {
    learning_rate = as_double();
  } else if (key == "adam_beta1") {
    adam_beta1 = as_double();
  } else if (key == "adam_beta2") {
    adam_beta2 = as_double();
  } else if (key == "adam_epsilon") {
    adam_epsilon = as_double();
  } else if (key == "adadelta_rho") {
    adadelta_rho = as_double();
  } else if (key == "adadelta_epsilon") {
    adadelta_epsilon = as_double();
  } else if (key == "adadelta_uses_learning_rate") {
    adadelta_uses_learning_rate = parse_bool(key, value);
  } else if (key == "clip_norm") {
    clip_norm = as_double();
  } else if (key == "batch_size") {
    batch_size = as_int();
  } else if (key == "epochs") {
    epochs = as_int();
  } else if (key == "patience") {
    patience = as_int();
  } else if (key == "stop_at_perfect_dev") {
    stop_at_perfect_dev = parse_bool(key, value);
  } else if (key == "beam_width") {
    beam_width = as_int();
  } else if (key == "dev_beam_width") {
    dev_beam_width = as_int();
  } else if (key == "schedule_k") {
    schedule_k = as_double();
  } else if (key == "cap_margin") {
    cap_margin = as_int();
  } else if (key == "cap_factor") {
    cap_factor = as_int();
  } else if (key == "cap_offset") {
    cap_offset = as_int();
  } else if (key == "seed") {
    seed = parse_number<uint64_t>(key, value);
  } else {
    throw InvalidArgument("unknown configuration key '" + key + "'");
  }
  if (dropout < 0 || dropout >= 1) throw InvalidArgument("dropout must be in [0, 1)");
  if (batch_size < 1 || epochs < 0 || patience < 0 || beam_width < 1 || dev_beam_width < 1)
    throw InvalidArgument("bad value for " + key);
}

std::string TrainConfig::hash() const {
  const std::string text = to_json().dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::map<std::string, std::string> parse_key_value_text(std::string_view text) {
  std::map<std::string, std::string> out;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "empty key");
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_value_text(buf.str());
}

double expert_probability(int epoch, double k) {
  return k / (k + std::exp(static_cast<double>(epoch) / k));
}

}  // namespace canseg
