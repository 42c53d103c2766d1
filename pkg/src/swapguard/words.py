"""Toy vocabulary for the synthetic benchmark.

Words are grouped into synonym families. The first member of each family is
the "canonical" word used when composing dialogues and hypotheses; the rest
exist as swap candidates. Each family with members occupies its own 2D plane
in the synthetic embedding table (see embedding.synthetic_table), so the
default table dimension of 50 supports at most 24 such families plus the
negation singleton.
"""

NOUN_FAMILIES = {
    "movie": ["film", "picture", "flick", "feature", "show"],
    "book": ["novel", "story", "paperback", "volume", "chapter"],
    "house": ["home", "cottage", "residence", "dwelling", "cabin"],
    "car": ["automobile", "vehicle", "sedan", "wagon", "coupe"],
    "dinner": ["meal", "supper", "feast", "banquet", "brunch"],
    "trip": ["journey", "voyage", "tour", "trek", "outing"],
    "game": ["contest", "tournament", "derby", "scrimmage", "playoff"],
    "teacher": ["instructor", "professor", "tutor", "mentor", "lecturer"],
}

ADJECTIVE_FAMILIES = {
    "good": ["great", "fine", "nice", "decent", "solid"],
    "bad": ["awful", "poor", "terrible", "dreadful", "lousy"],
    "long": ["lengthy", "extended", "prolonged", "overlong", "endless"],
    "quick": ["brief", "rapid", "speedy", "swift", "snappy"],
    "funny": ["amusing", "hilarious", "comic", "witty", "playful"],
    "boring": ["dull", "tedious", "bland", "dreary", "monotonous"],
    "big": ["large", "huge", "enormous", "giant", "vast"],
    "small": ["little", "tiny", "miniature", "modest", "slight"],
}

ADVERB_FAMILIES = {
    "really": ["truly", "genuinely", "honestly", "certainly", "definitely"],
    "slowly": ["gradually", "steadily", "calmly", "gently", "quietly"],
    "often": ["frequently", "regularly", "repeatedly", "constantly", "usually"],
}

VERB_FAMILIES = {
    "watched": ["viewed", "observed", "screened", "witnessed", "rewatched"],
    "enjoyed": ["liked", "loved", "adored", "savored", "relished"],
    "bought": ["purchased", "acquired", "grabbed", "obtained", "secured"],
    "finished": ["completed", "ended", "concluded", "wrapped", "settled"],
    "visited": ["toured", "attended", "explored", "frequented", "roamed"],
}

# "not" is the negation cue for synthetic negatives. It sits in the embedding
# table (so classifiers can see it) but is a stopword, hence never swapped.
SINGLETON_WORDS = ["not"]

ALL_FAMILIES: dict[str, list[str]] = {
    **NOUN_FAMILIES,
    **ADJECTIVE_FAMILIES,
    **ADVERB_FAMILIES,
    **VERB_FAMILIES,
    **{w: [] for w in SINGLETON_WORDS},
}


def all_words() -> list[str]:
    """Every vocabulary word, canonical members first within each family."""
    out = []
    for head, members in ALL_FAMILIES.items():
        out.append(head)
        out.extend(members)
    return out
