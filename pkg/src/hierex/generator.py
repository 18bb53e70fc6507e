"""Deterministic synthetic lawsuit-corpus generator.

Documents follow a fixed discourse grammar: one CAPTION sentence, one to
four FACTS, one CLAIM, one RULING, then up to two OTHER sentences, in that
order. Sentences come from per-class template pools whose slots are filled
from fixed name/court/amount lists, and every slot filler carries its gold
entity span, so the emitted BIO tags are valid by construction.

Two templates appear in both the FACTS and OTHER pools on purpose: such
sentences are only classifiable from their position in the document, which
is exactly the signal the document-level encoder exists to carry.

All randomness flows through one splitmix64 stream, so a (n_docs, seed)
pair always produces the identical corpus.
"""

from __future__ import annotations

from .data import Document, Sentence, TagSpan, bio_encode
from .linalg import Rng

FIRST_NAMES = (
    "Aaron", "Alice", "Brian", "Brenda", "Carl", "Clara", "Daniel", "Diane",
    "Edward", "Elena", "Frank", "Fiona", "George", "Grace", "Henry", "Helen",
    "Ian", "Irene", "James", "Julia", "Kevin", "Karen", "Louis", "Laura",
    "Martin", "Maria", "Nathan", "Nancy", "Oscar", "Olivia", "Peter", "Paula",
    "Quentin", "Quinn", "Robert", "Rachel", "Samuel", "Sarah", "Thomas",
    "Teresa", "Ulric", "Uma", "Victor", "Vera", "Walter", "Wendy", "Xavier",
    "Yolanda", "Zachary", "Zoe",
)

LAST_NAMES = (
    "Anderson", "Baker", "Carter", "Dawson", "Ellis", "Foster", "Garner",
    "Hughes", "Ingram", "Jensen", "Keller", "Lawson", "Mercer", "Norris",
    "Osborne", "Porter", "Quigley", "Reyes", "Sutton", "Tanner", "Underwood",
    "Vaughn", "Whitfield", "Xiong", "Yates", "Zimmerman", "Barrett",
    "Calhoun", "Donovan", "Everett",
)

COURTS = (
    "Superior Court of Hartley County",
    "Circuit Court of Marion Falls",
    "District Court of Eastern Caldwell",
    "Court of Common Pleas of Raven County",
    "Superior Court of New Alderton",
    "United States District Court for the District of Westfall",
    "Northern District Court of Ashvale",
    "Municipal Court of Port Henry",
    "County Court of Silver Hollow",
    "Appellate Division of the Fourth Department",
    "Supreme Court of the State of Norland",
    "Chancery Court of Belmont County",
    "District Court of Greater Fenwick",
    "Circuit Court of Lower Brampton",
    "Probate Court of Ostrander County",
    "Family Court of the City of Kelton",
    "Small Claims Court of Dunmore",
    "Commercial Court of the Harbor District",
    "Justice Court of Meridian Township",
    "Superior Court of the County of Veras",
)

MONTHS = ("January", "February", "March", "April", "May", "June", "July",
          "August", "September", "October", "November", "December")

AMOUNTS = (
    "1,200", "2,450", "3,875", "4,300", "5,000", "6,750", "7,125", "8,900",
    "9,425", "10,500", "12,000", "12,500", "13,750", "15,000", "16,250",
    "18,400", "20,000", "22,500", "25,000", "27,300", "30,000", "32,750",
    "35,000", "38,200", "40,000", "45,500", "50,000", "55,250", "60,000",
    "65,400", "70,000", "75,000", "82,500", "90,000", "95,750", "100,000",
    "125,000", "150,000", "175,000", "200,000", "250,000", "300,000",
    "375,000", "425,000", "500,000", "650,000", "750,000", "875,000",
)

# Templates are pre-tokenized: every token, punctuation included, is
# space-separated. {SLOT} markers expand to multi-token fillers.
CAPTION_TEMPLATES = (
    "{PLA} , plaintiff , vs . {DEF} , defendant , in the {COURT} , Case No . {CASENO} .",
    "{PLA} v . {DEF} , {COURT} , Docket No . {CASENO} .",
    "In the matter of {PLA} vs . {DEF} , before the {COURT} .",
    "{PLA} , petitioner , against {DEF} , respondent , {COURT} , No . {CASENO} .",
)

FACTS_TEMPLATES = (
    "On {DATE} , {PLA} filed a complaint against {DEF} in the {COURT} .",
    "{PLA} alleges that {DEF} breached the service agreement signed on {DATE} .",
    "The plaintiff {PLA} claims losses of {AMT} arising from the disputed invoice .",
    "{DEF} denied the allegations in an answer dated {DATE} .",
    "According to the complaint , {DEF} failed to deliver the goods promised to {PLA} .",
    "The parties met on {DATE} to discuss settlement but reached no agreement .",
    "A hearing was held on {DATE} .",
    "The record was supplemented on {DATE} .",
)

CLAIM_TEMPLATES = (
    "{PLA} seeks {AMT} in damages together with costs and interest .",
    "The complaint demands judgment of {AMT} against {DEF} .",
    "{PLA} requests relief in the amount of {AMT} plus attorney fees .",
    "Plaintiff prays for an award of {AMT} and such further relief as the court deems just .",
)

RULING_TEMPLATES = (
    "On {DATE} , {JUDGE} ordered {DEF} to pay {AMT} to {PLA} .",
    "{JUDGE} of the {COURT} ruled in favor of {PLA} on {DATE} .",
    "The court , per {JUDGE} , dismissed the claim against {DEF} with prejudice .",
    "Judgment for {AMT} was entered against {DEF} by {JUDGE} on {DATE} .",
    "{JUDGE} granted the motion and awarded {PLA} the sum of {AMT} .",
)

OTHER_TEMPLATES = (
    "A hearing was held on {DATE} .",
    "The record was supplemented on {DATE} .",
    "Counsel for both parties filed notices of appearance on {DATE} .",
    "The clerk entered the order on the docket on {DATE} .",
    "No further proceedings are scheduled at this time .",
)


def _name(rng: Rng) -> list[str]:
    return [rng.choice(FIRST_NAMES), rng.choice(LAST_NAMES)]


def _date(rng: Rng) -> list[str]:
    return [rng.choice(MONTHS), str(1 + rng.below(28)), ",", str(1995 + rng.below(26))]


def _fill(template: str, cls: str, ents: dict[str, list[str]], rng: Rng) -> Sentence:
    tokens: list[str] = []
    spans: list[TagSpan] = []
    for part in template.split(" "):
        if part.startswith("{"):
            slot = part[1:-1]
            if slot == "DATE":
                filler, label = _date(rng), "DATE"
            elif slot == "AMT":
                filler, label = ["$", rng.choice(AMOUNTS)], "AMT"
            elif slot == "CASENO":
                filler, label = [f"{10 + rng.below(90)}-{100 + rng.below(900)}"], None
            else:
                filler, label = ents[slot], slot
            if label is not None:
                spans.append(TagSpan(len(tokens), len(tokens) + len(filler), label))
            tokens.extend(filler)
        else:
            tokens.append(part)
    return Sentence(tokens=tokens, tags=bio_encode(spans, len(tokens)), class_name=cls)


def generate_document(doc_id: str, rng: Rng) -> Document:
    pla = _name(rng)
    dfd = _name(rng)
    while dfd == pla:
        dfd = _name(rng)
    ents = {
        "PLA": pla,
        "DEF": dfd,
        "COURT": rng.choice(COURTS).split(" "),
        "JUDGE": ["Judge"] + _name(rng),
    }
    sents = [_fill(rng.choice(CAPTION_TEMPLATES), "CAPTION", ents, rng)]
    for _ in range(1 + rng.below(4)):
        sents.append(_fill(rng.choice(FACTS_TEMPLATES), "FACTS", ents, rng))
    sents.append(_fill(rng.choice(CLAIM_TEMPLATES), "CLAIM", ents, rng))
    sents.append(_fill(rng.choice(RULING_TEMPLATES), "RULING", ents, rng))
    for _ in range(rng.below(3)):
        sents.append(_fill(rng.choice(OTHER_TEMPLATES), "OTHER", ents, rng))
    return Document(doc_id, sents)


def generate_corpus(n_docs: int, seed: int) -> list[Document]:
    """n_docs synthetic documents, fully determined by the seed."""
    if n_docs < 1:
        raise ValueError(f"generate_corpus: n_docs must be >= 1, got {n_docs}")
    rng = Rng(seed)
    return [generate_document(f"doc-{i:05d}", rng) for i in range(n_docs)]
