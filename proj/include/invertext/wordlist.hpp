#pragma once

#include <array>
#include <string_view>

namespace invertext {

// Fixture of 500 common lowercase words, 4-7 letters, used by the password
// generator. Embedded so generation needs no external data.
inline constexpr std::array<std::string_view, 500> kPasswordWords = {
    "able", "about", "above", "action", "active", "actor", "adult", "after",
    "again", "agent", "agree", "ahead", "alarm", "album", "alert", "alive",
    "allow", "alone", "along", "alpha", "always", "amber", "among", "anchor",
    "angel", "anger", "angle", "animal", "answer", "apart", "apple", "april",
    "area", "arena", "argue", "arise", "armor", "army", "around", "array",
    "arrow", "artist", "aside", "asset", "atom", "attack", "august", "aunt",
    "autumn", "avenue", "avoid", "awake", "award", "aware", "away", "baby",
    "back", "bacon", "badge", "baker", "ball", "band", "bank", "barn",
    "base", "basic", "basket", "battle", "beach", "bear", "beat", "beauty",
    "began", "begin", "being", "bell", "below", "bench", "berry", "best",
    "better", "bird", "birth", "black", "blade", "blame", "blank", "blast",
    "blaze", "blend", "bless", "blind", "block", "blood", "bloom", "blue",
    "board", "boat", "body", "bone", "bonus", "book", "boost", "booth",
    "border", "born", "both", "bottle", "bottom", "bound", "brain", "branch",
    "brave", "bread", "break", "breeze", "brick", "bridge", "brief", "bright",
    "bring", "broad", "broken", "bronze", "brother", "brown", "brush", "buddy",
    "budget", "build", "bunny", "burn", "burst", "busy", "butter", "button",
    "buyer", "cabin", "cable", "cake", "call", "calm", "camera", "camp",
    "canal", "candle", "candy", "canyon", "card", "care", "carpet", "carry",
    "case", "castle", "catch", "cause", "cave", "cedar", "cell", "center",
    "chain", "chair", "chance", "change", "charm", "chart", "chase", "cheap",
    "check", "cheer", "cheese", "cherry", "chess", "chest", "chief", "child",
    "choice", "chorus", "chose", "church", "circle", "city", "civil", "claim",
    "class", "clean", "clear", "clerk", "clever", "click", "cliff", "climb",
    "clock", "close", "cloth", "cloud", "clover", "club", "coach", "coast",
    "coat", "code", "coffee", "coin", "cold", "color", "come", "comet",
    "common", "cook", "cool", "copper", "copy", "coral", "core", "corn",
    "corner", "cost", "cotton", "couch", "count", "course", "court", "cousin",
    "cover", "crab", "craft", "crane", "crash", "cream", "credit", "creek",
    "crew", "crisp", "cross", "crowd", "crown", "cruise", "crystal", "curve",
    "cycle", "daily", "dance", "dark", "dawn", "deal", "dear", "debt",
    "decade", "deep", "deer", "delta", "dense", "depth", "desert", "design",
    "desk", "detail", "device", "diary", "digit", "dinner", "direct", "dish",
    "doctor", "dollar", "donkey", "door", "double", "doubt", "dove", "down",
    "dozen", "draft", "dragon", "drama", "draw", "dream", "dress", "drift",
    "drink", "drive", "drop", "drum", "dust", "duty", "eager", "eagle",
    "early", "earth", "east", "easy", "echo", "edge", "effect", "effort",
    "eight", "either", "elbow", "elder", "empire", "empty", "enemy", "energy",
    "engine", "enjoy", "enough", "enter", "entire", "entry", "equal", "error",
    "escape", "even", "event", "every", "exact", "exit", "extra", "fabric",
    "face", "fact", "fair", "faith", "fall", "false", "family", "fancy",
    "farm", "fast", "father", "fault", "favor", "feast", "feather", "fellow",
    "fence", "fever", "fiber", "field", "fifth", "fight", "figure", "final",
    "find", "fine", "finger", "finish", "fire", "first", "fish", "five",
    "flag", "flame", "flash", "fleet", "flight", "float", "flood", "floor",
    "flour", "flow", "flower", "fluid", "flute", "focus", "follow", "food",
    "force", "forest", "forget", "form", "fort", "fortune", "forum", "found",
    "four", "frame", "free", "fresh", "friend", "frost", "fruit", "full",
    "funny", "future", "galaxy", "game", "garden", "gate", "gather", "gentle",
    "ghost", "giant", "gift", "give", "glad", "glass", "globe", "glory",
    "glove", "goal", "gold", "golden", "good", "grace", "grade", "grain",
    "grand", "grant", "grape", "grass", "gray", "great", "green", "greet",
    "grid", "ground", "group", "grow", "guard", "guess", "guest", "guide",
    "guitar", "habit", "hair", "half", "hall", "hand", "happy", "harbor",
    "hard", "harvest", "hawk", "head", "heart", "heavy", "hello", "help",
    "hero", "hidden", "high", "hill", "hint", "hold", "hollow", "home",
    "honey", "honor", "hope", "horse", "host", "hotel", "hour", "house",
    "human", "humble", "hunt", "hurry", "ideal", "image", "impact", "index",
    "indigo", "inner", "input", "iron", "island", "issue", "item", "ivory",
    "jacket", "jelly", "jewel", "join", "joint", "jolly", "journey", "judge",
    "juice", "july", "jump", "june", "jungle", "junior", "just", "keen",
    "keep", "kept", "kettle", "kind", "king", "kitten", "knee", "knife",
    "knight", "knock", "know", "label",
};

}  // namespace invertext
