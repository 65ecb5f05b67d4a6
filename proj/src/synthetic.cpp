#include "adr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "adr/error.hpp"
#include "adr/rng.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

struct LangPair {
  const char* de;
  const char* en;
};

// Each entry is one concept; German and English share an embedding base.
constexpr LangPair kEffects[] = {
    {"übelkeit", "nausea"},           {"kopfschmerzen", "headache"},   {"schwindel", "dizziness"},
    {"haarausfall", "hairloss"},      {"herzrasen", "palpitations"},   {"schlaflosigkeit", "insomnia"},
    {"gewichtszunahme", "weightgain"}, {"ausschlag", "rash"},          {"juckreiz", "itching"},
    {"müdigkeit", "fatigue"},         {"durchfall", "diarrhea"},       {"muskelschmerzen", "musclepain"},
    {"zittern", "tremor"},            {"schweißausbrüche", "sweating"}, {"mundtrockenheit", "drymouth"},
    {"libidoverlust", "libidoloss"},  {"magenkrämpfe", "cramps"},      {"benommenheit", "drowsiness"},
};

constexpr LangPair kFrameWords[] = {{"seit", "since"}, {"ich", "i"}, {"nehme", "take"}};

// Symptom words that also appear in negative posts (illness, not reaction).
constexpr LangPair kSymptoms[] = {
    {"hitzewallungen", "hotflashes"}, {"rückenschmerzen", "backpain"}, {"erkältung", "cold"},
    {"fieber", "fever"},              {"husten", "cough"},             {"stress", "stress"},
    {"verspannungen", "tension"},     {"narbe", "scar"},               {"schwellung", "swelling"},
};

constexpr LangPair kReactionWords[] = {
    {"nebenwirkung", "sideeffect"}, {"vertrage", "tolerate"}, {"bekommen", "got"}, {"schlimm", "bad"},
    {"abgesetzt", "discontinued"},  {"seitdem", "since"},
};

constexpr LangPair kNeutralDrugWords[] = {
    {"hilft", "helps"}, {"verschrieben", "prescribed"}, {"dosis", "dose"}, {"apotheke", "pharmacy"},
    {"rezept", "prescription"}, {"gut", "well"},
};

constexpr const char* kFillerDe[] = {
    "ich",      "du",      "wir",     "sie",      "es",        "und",      "oder",     "aber",     "dann",
    "auch",     "noch",    "schon",   "nur",      "sehr",      "mal",      "doch",     "wieder",   "immer",
    "heute",    "gestern", "morgen",  "woche",    "monat",     "jahr",     "arzt",     "ärztin",   "termin",
    "praxis",   "frage",   "antwort", "forum",    "danke",     "hallo",    "liebe",    "grüße",    "gute",
    "habe",     "hatte",   "bin",     "war",      "ist",       "sind",     "wird",     "wurde",    "kann",
    "konnte",   "muss",    "soll",    "möchte",   "weiß",      "glaube",   "denke",    "finde",    "gehe",
    "mache",    "machen",  "gehen",   "sagen",    "fragen",    "lesen",    "schreiben", "erfahrung", "problem",
    "probleme", "körper",  "haut",    "knie",     "herz",      "kopf",     "bauch",    "rücken",   "blut",
    "wert",     "werte",   "untersuchung", "operation", "klinik", "kasse",  "familie",  "mann",     "kinder",
    "mutter",   "arbeit",  "sport",   "essen",    "trinken",   "schlafen", "wetter",   "zeit",     "tag",
    "tage",     "abend",   "nacht",   "früh",     "spät",      "lange",    "kurz",     "viel",     "wenig",
    "besser",   "schlechter", "normal", "gleich", "wirklich",  "eigentlich", "vielleicht", "bestimmt", "leider",
    "endlich",  "natürlich", "einfach", "richtig", "wichtig",  "anderen",  "meine",    "meinen",   "mein",
    "dein",     "ihr",     "ein",     "eine",     "einen",     "der",      "die",      "das",      "den",
    "dem",      "mit",     "von",     "für",      "auf",       "bei",      "nach",     "vor",      "über",
    "unter",    "wegen",   "ohne",    "bis",      "seit",      "wenn",     "weil",     "dass",     "ob",
};

constexpr const char* kFillerEn[] = {
    "i",        "you",     "we",      "they",     "it",        "and",      "or",       "but",      "then",
    "also",     "still",   "already", "only",     "very",      "again",    "always",   "today",    "yesterday",
    "week",     "month",   "year",    "doctor",   "appointment", "question", "answer", "thanks",   "hello",
    "have",     "had",     "am",      "was",      "is",        "are",      "will",     "can",      "could",
    "must",     "should",  "know",    "think",    "feel",      "felt",     "go",       "went",     "make",
    "experience", "problem", "body",  "skin",     "knee",      "heart",    "head",     "stomach",  "back",
    "blood",    "levels",  "test",    "surgery",  "hospital",  "insurance", "family",  "husband",  "kids",
    "work",     "exercise", "food",   "sleep",    "time",      "day",      "days",     "evening",  "night",
    "early",    "late",    "long",    "short",    "much",      "little",   "better",   "worse",    "normal",
    "really",   "actually", "maybe",  "probably", "unfortunately", "finally", "just",   "important", "other",
    "my",       "your",    "a",       "an",       "the",       "with",     "from",     "for",      "on",
    "at",       "after",   "before",  "about",    "without",   "until",    "since",    "when",     "because",
    "that",     "if",      "months",  "years",    "weeks",     "pills",    "dose",     "started",  "stopped",
};

constexpr const char* kWomensHealth[] = {
    "wj",       "wechseljahre", "menopause", "klimakterium", "periode",   "regelblutung", "zyklus",
    "eisprung", "frauenarzt",   "frauenärztin", "gynäkologe", "schwangerschaft", "mp", "perimenopause",
    "period",   "cycle",        "ovulation", "gynecologist", "pregnancy",
};

constexpr const char* kRealDrugs[] = {
    "ibuprofen",   "aspirin",     "paracetamol", "diclofenac",  "metformin",   "simvastatin", "levothyroxin",
    "sertralin",   "citalopram",  "escitalopram", "venlafaxin", "amitriptylin", "mirtazapin", "omeprazol",
    "pantoprazol", "ramipril",    "bisoprolol",  "metoprolol",  "amlodipin",   "candesartan", "tamoxifen",
    "letrozol",    "estradiol",   "progesteron", "prednisolon", "cortison",    "tilidin",     "tramadol",
    "gabapentin",  "pregabalin",  "lamotrigin",  "quetiapin",   "duloxetin",   "fluoxetin",   "paroxetin",
    "bupropion",   "lithium",     "atorvastatin", "clopidogrel", "marcumar",   "insulin",     "methotrexat",
    "isotretinoin", "doxycyclin", "amoxicillin", "cotrim",      "ciprofloxacin", "cetirizin", "loratadin",
    "novaminsulfon",
};

constexpr const char* kSyllableA[] = {"ab", "bel", "cor", "dex", "el", "fen", "gal", "hal", "ix", "lor",
                                      "mar", "nor", "ox", "pra", "quin", "ret", "sol", "tar", "ven", "zol"};
constexpr const char* kSyllableB[] = {"a", "i", "o", "u", "e", "ari", "oxi", "ela", "uti", "eno"};
constexpr const char* kSyllableC[] = {"pril", "statin", "xetin", "mab", "zol", "lol", "dipin", "sartan",
                                      "cillin", "tidin", "pam", "fen", "mycin", "parin", "tropin"};

// Short replies that fall below the four-token filter.
constexpr const char* kShortReplies[] = {"Danke!", "Gute Besserung", "Sehe ich so.", "Thanks!", "Same here."};

const char* pick(const LangPair& p, bool de) { return de ? p.de : p.en; }

template <typename T, std::size_t N>
const T& choose(Rng& rng, const T (&items)[N]) {
  return items[rng.below(N)];
}

std::string capitalize(std::string s) {
  if (!s.empty() && static_cast<unsigned char>(s[0]) < 0x80) s[0] = static_cast<char>(std::toupper(s[0]));
  return s;
}

std::string format_int(std::size_t value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

std::size_t draw_length(Rng& rng, double mean, double sd, std::size_t lo, std::size_t hi) {
  const double x = mean + sd * rng.normal();
  return static_cast<std::size_t>(std::clamp(std::lround(x), static_cast<long>(lo), static_cast<long>(hi)));
}

// Occasional maskable entities so the preprocessing path has real work.
std::vector<std::string> draw_entity(Rng& rng, bool de) {
  switch (rng.below(5)) {
    case 0: return {"http://forum.example.de/thread/" + std::to_string(1000 + rng.below(9000))};
    case 1:
      return {format_int(1 + rng.below(28), 2) + "." + format_int(1 + rng.below(12), 2) + "." +
              std::to_string(2015 + rng.below(7))};
    case 2: return {"@user" + std::to_string(rng.below(1000))};
    case 3: return {std::to_string(5 * (1 + rng.below(40))), "mg"};
    default: return {de ? "mail" : "email", "an", "name" + std::to_string(rng.below(100)) + "@example.org"};
  }
}

std::string render(std::vector<std::vector<std::string>> chunks, Rng& rng) {
  // Each chunk is a word or phrase; sentences end every 8-18 tokens.
  std::vector<std::string> words;
  for (auto& c : chunks)
    for (auto& w : c) words.push_back(std::move(w));
  std::string out;
  std::size_t until_stop = 8 + rng.below(11);
  bool sentence_start = true;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += sentence_start ? capitalize(words[i]) : words[i];
    sentence_start = false;
    if (--until_stop == 0 || i + 1 == words.size()) {
      out += rng.below(6) == 0 ? "!" : ".";
      until_stop = 8 + rng.below(11);
      sentence_start = true;
    }
  }
  return out;
}

}  // namespace

std::map<std::string, double> lifeline_topic_weights() {
  // train/dev + test document counts per forum topic, 4169 documents total.
  const std::pair<const char*, double> counts[] = {
      {"women's health", 2541 + 634}, {"cosmetic OPs", 166 + 47}, {"skin", 129 + 36},   {"bones", 125 + 29},
      {"gen. med.", 117 + 20},        {"heart", 92 + 26},         {"nerves", 44 + 11},   {"men's health", 22 + 3},
      {"sports", 21 + 6},             {"infections", 21 + 5},     {"nutrition", 19 + 9}, {"int. organs", 15 + 3},
      {"allergies", 8 + 2},           {"life", 7 + 2},            {"gastroint. system", 7 + 2},
  };
  double total = 0;
  for (const auto& [_, n] : counts) total += n;
  std::map<std::string, double> w;
  for (const auto& [topic, n] : counts) w[topic] = n / total;
  return w;
}

std::map<std::string, double> source_topic_weights() {
  return {{"pain relief", 0.35}, {"cholesterol", 0.25}, {"psychiatric", 0.4}};
}

std::vector<std::string> synthetic_medication_names(std::size_t count) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](std::string s) {
    if (out.size() < count && seen.insert(s).second) out.push_back(std::move(s));
  };
  for (const char* d : kRealDrugs) add(d);
  for (const char* c : kSyllableC)
    for (const char* a : kSyllableA)
      for (const char* b : kSyllableB) add(std::string(a) + b + c);
  return out;
}

std::vector<std::string> womens_health_terms() { return {std::begin(kWomensHealth), std::end(kWomensHealth)}; }

Corpus generate_synthetic(std::size_t n_pos, std::size_t n_neg, const std::map<std::string, double>& topic_weights,
                          const std::string& lang, std::uint64_t seed, const std::string& source) {
  if (lang != "de" && lang != "en") throw ArgumentError("generate_synthetic: unsupported language '" + lang + "'");
  if (topic_weights.empty()) throw ArgumentError("generate_synthetic: no topic weights");
  double sum = 0;
  for (const auto& [topic, w] : topic_weights) {
    if (!(w >= 0.0)) throw ArgumentError("generate_synthetic: negative weight for topic '" + topic + "'");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ArgumentError("generate_synthetic: topic weights sum to " + std::to_string(sum) + ", expected 1");

  const bool de = lang == "de";
  const auto meds = synthetic_medication_names();
  const std::vector<std::pair<std::string, double>> topics(topic_weights.begin(), topic_weights.end());
  Rng rng(derive_seed(seed, 0x5e17));

  auto filler = [&]() -> std::string {
    return de ? kFillerDe[rng.below(std::size(kFillerDe))] : kFillerEn[rng.below(std::size(kFillerEn))];
  };
  auto drug = [&]() -> std::string {
    // Zipf-like preference for the first (common) names.
    const std::size_t head = std::size(kRealDrugs);
    const std::string& name = rng.below(3) ? meds[rng.below(head)] : meds[rng.below(meds.size())];
    return rng.below(2) ? capitalize(name) : name;
  };
  auto topic = [&]() -> std::string {
    double u = rng.uniform(), acc = 0;
    for (const auto& [t, w] : topics) {
      acc += w;
      if (u < acc) return t;
    }
    return topics.back().first;
  };

  std::vector<int> labels(n_pos, 1);
  labels.insert(labels.end(), n_neg, 0);
  rng.shuffle(std::span(labels));

  std::vector<Document> docs;
  docs.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    Document doc;
    doc.id = source + "-" + lang + "-" + format_int(i, 5);
    doc.label = label;
    doc.lang = lang;
    doc.source = source;
    doc.topic = topic();
    const bool womens = doc.topic == "women's health";

    if (label == 0 && rng.below(100) < 2) {
      doc.text = kShortReplies[rng.below(std::size(kShortReplies))];
      docs.push_back(std::move(doc));
      continue;
    }
    const std::size_t target =
        label ? draw_length(rng, 132.0, 45.0, 25, 420) : draw_length(rng, 104.0, 45.0, 6, 420);

    std::vector<std::vector<std::string>> chunks;
    if (label == 1) {
      const std::size_t n_effects = 1 + rng.below(3);
      for (std::size_t k = 0; k < n_effects; ++k) {
        std::vector<std::string> c;
        if (de) {
          c = {"seit", "ich", drug(), "nehme"};
        } else {
          c = {"since", "i", "take", drug()};
        }
        c.push_back(pick(choose(rng, kReactionWords), de));
        c.push_back(pick(choose(rng, kEffects), de));
        if (rng.below(2)) c.push_back(pick(choose(rng, kEffects), de));
        chunks.push_back(std::move(c));
      }
      if (womens && rng.below(100) < 15) chunks.push_back({kWomensHealth[rng.below(std::size(kWomensHealth))]});
    } else {
      if (rng.below(100) < 35)
        chunks.push_back({drug(), pick(choose(rng, kNeutralDrugWords), de)});
      if (rng.below(100) < 40) chunks.push_back({pick(choose(rng, kSymptoms), de)});
      if (rng.below(100) < 8) chunks.push_back({pick(choose(rng, kEffects), de)});
      if (womens && rng.below(100) < 45) chunks.push_back({kWomensHealth[rng.below(std::size(kWomensHealth))]});
    }
    if (rng.below(100) < 12) chunks.push_back(draw_entity(rng, de));

    std::size_t used = 0;
    for (const auto& c : chunks) used += c.size();
    // Interleave filler so the signal chunks land at random positions.
    std::vector<std::vector<std::string>> body;
    const std::size_t n_filler = target > used ? target - used : 0;
    for (std::size_t k = 0; k < n_filler; ++k) body.push_back({filler()});
    for (auto& c : chunks) {
      const auto pos = static_cast<std::ptrdiff_t>(rng.below(body.size() + 1));
      body.insert(body.begin() + pos, std::move(c));
    }
    doc.text = render(std::move(body), rng);
    docs.push_back(std::move(doc));
  }
  return Corpus(source + "-" + lang, std::move(docs));
}

std::string synthetic_embeddings_vec(std::size_t dim, std::uint64_t seed) {
  std::vector<std::pair<std::string, std::vector<float>>> rows;
  std::set<std::string> seen;
  auto base = [&](std::uint64_t concept_id, double scale) {
    Rng r(derive_seed(seed, concept_id));
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(scale * r.normal());
    return v;
  };
  // Shared class directions make the averaged embedding informative.
  const auto effect_dir = base(1, 0.6), drug_dir = base(2, 0.4), symptom_dir = base(3, 0.4);
  auto add = [&](const std::string& word, std::uint64_t concept_id, const std::vector<float>* dir) {
    const std::string key = to_lower(word);
    if (!seen.insert(key).second) return;
    auto v = base(concept_id, 0.5);
    Rng noise(derive_seed(seed ^ 0xabcdef, fnv1a64(key)));
    for (std::size_t j = 0; j < dim; ++j) {
      v[j] += static_cast<float>(0.1 * noise.normal());
      if (dir) v[j] += (*dir)[j];
    }
    rows.emplace_back(key, std::move(v));
  };
  std::uint64_t next_concept = 100;
  for (const auto& p : kEffects) {
    ++next_concept;
    add(p.de, next_concept, &effect_dir);
    add(p.en, next_concept, &effect_dir);
  }
  for (const auto& p : kReactionWords) {
    ++next_concept;
    add(p.de, next_concept, &effect_dir);
    add(p.en, next_concept, &effect_dir);
  }
  for (const auto& p : kSymptoms) {
    ++next_concept;
    add(p.de, next_concept, &symptom_dir);
    add(p.en, next_concept, &symptom_dir);
  }
  for (const auto& p : kNeutralDrugWords) {
    ++next_concept;
    add(p.de, next_concept, nullptr);
    add(p.en, next_concept, nullptr);
  }
  for (const auto& p : kFrameWords) {
    ++next_concept;
    add(p.de, next_concept, nullptr);
    add(p.en, next_concept, nullptr);
  }
  for (const auto& m : synthetic_medication_names()) add(m, ++next_concept, &drug_dir);
  for (const char* w : kWomensHealth) add(w, ++next_concept, &symptom_dir);
  for (const char* w : kFillerDe) add(w, ++next_concept, nullptr);
  for (const char* w : kFillerEn) add(w, ++next_concept, nullptr);

  std::ostringstream out;
  out << rows.size() << ' ' << dim << '\n';
  for (const auto& [word, v] : rows) {
    out << word;
    for (float x : v) out << ' ' << format_fixed(x, 5);
    out << '\n';
  }
  return out.str();
}

}  // namespace adr
