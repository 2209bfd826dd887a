#!/usr/bin/env python3
"""Regenerates the fixture corpus, sample feed and word vectors.

Output is deterministic: rerunning this script reproduces the shipped files
byte for byte.
"""

import json
import random
import re
from collections import Counter, defaultdict
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent
DIMS = 300
SEED = 20200123

TOPICS = [
    {
        "key": "sg_case",
        "source": "news",
        "day": "2020-01-23",
        "count": 20,
        "titles": [
            "Singapore confirms first case of Wuhan coronavirus",
            "Singapore reports first imported coronavirus case",
            "First coronavirus case confirmed in Singapore",
            "Singapore health ministry confirms coronavirus patient",
        ],
        "lead": [
            "The Ministry of Health said a visitor from Wuhan tested positive.",
            "Singapore confirmed the first case of the coronavirus on Thursday.",
        ],
        "sentences": [
            "The patient was isolated because he had a fever.",
            "Officials traced contacts by checking flight records.",
            "Gan Kim Yong urged calm as hospitals screened travellers.",
            "The man arrived at Changi with his family.",
            "Singapore raised its alert level after the case.",
            "The Ministry of Health isolated the patient at a hospital in Singapore.",
            "Doctors tested the family of the coronavirus patient.",
        ],
    },
    {
        "key": "wuhan_lockdown",
        "source": "news",
        "day": "2020-01-23",
        "count": 20,
        "titles": [
            "China locks down Wuhan as coronavirus spreads",
            "Wuhan sealed off to halt coronavirus outbreak",
            "Authorities suspend transport in Wuhan",
            "China seals Wuhan to contain the outbreak",
        ],
        "lead": [
            "Authorities in Wuhan suspended buses and trains on Thursday.",
            "China sealed the city of Wuhan to halt the outbreak.",
        ],
        "sentences": [
            "Zhou Xianwang said the airport was closed.",
            "Residents queued for food because shops were closing.",
            "Hubei ordered the closure of markets.",
            "The outbreak killed seventeen people in Hubei.",
            "Beijing cancelled lunar new year events.",
            "Trains out of Wuhan halted at ten in the morning.",
            "Residents in Wuhan stocked up on rice and noodles.",
        ],
    },
    {
        "key": "who_meeting",
        "source": "news",
        "day": "2020-01-23",
        "count": 16,
        "titles": [
            "WHO stops short of declaring global emergency",
            "WHO committee meets in Geneva over coronavirus",
            "World Health Organization delays emergency declaration",
        ],
        "lead": [
            "The World Health Organization met in Geneva on 23 January 2020.",
            "Tedros Adhanom said the outbreak was an emergency in China.",
        ],
        "sentences": [
            "WHO declared the situation serious but not global.",
            "The committee will meet again within ten days.",
            "Experts discussed the risk of human transmission.",
            "Tedros Adhanom praised the response of China.",
            "The committee was divided over the emergency declaration.",
            "Delegates in Geneva debated the transmission evidence.",
        ],
    },
    {
        "key": "sg_social",
        "source": "social",
        "day": "2020-01-23",
        "count": 14,
        "titles": [
            "First case in Singapore, stay safe everyone",
            "Singapore confirmed a case, masks sold out",
            "Cannot believe the virus reached Singapore",
        ],
        "lead": [
            "Singapore confirmed the first case today.",
            "The virus reached Singapore from Wuhan.",
        ],
        "sentences": [
            "Masks sold out at every pharmacy near Changi.",
            "Stay safe and wash your hands everyone.",
            "My office told us to check our temperature.",
            "Queues at the pharmacy were crazy tonight.",
            "Hoping the patient recovers soon.",
        ],
    },
    {
        "key": "mask_social",
        "source": "social",
        "day": "2020-01-23",
        "count": 14,
        "titles": [
            "Pharmacies ran out of masks",
            "Everyone is buying masks today",
            "Where can I still buy surgical masks",
        ],
        "lead": [
            "Pharmacies in Hong Kong ran out of surgical masks.",
            "Everyone is buying masks and hand sanitiser.",
        ],
        "sentences": [
            "The queue for masks went around the block.",
            "Prices for masks doubled overnight.",
            "Bought the last box of masks at the shop.",
            "Sanitiser shelves are empty everywhere.",
            "My mum sent masks from Shenzhen.",
        ],
    },
    {
        "key": "trump_china",
        "source": "news",
        "day": "2020-01-24",
        "count": 16,
        "titles": [
            "Trump praises China response to coronavirus",
            "Donald Trump thanks Xi Jinping over virus efforts",
            "White House praises transparency of China",
        ],
        "lead": [
            "Donald Trump praised China for its transparency.",
            "Trump thanked Xi Jinping on Twitter.",
        ],
        "sentences": [
            "The United States screened passengers from Wuhan.",
            "Alex Azar said the risk to Americans remained low.",
            "Washington evacuated diplomats from Wuhan.",
            "Trump said the situation was under control.",
            "The White House briefed senators on the outbreak.",
            "Xi Jinping pledged a transparent response.",
        ],
    },
    {
        "key": "markets",
        "source": "news",
        "day": "2020-01-24",
        "count": 16,
        "titles": [
            "Asian markets fall as virus fears grow",
            "Stocks slump on coronavirus worries",
            "Oil prices drop as outbreak spreads",
        ],
        "lead": [
            "Markets in Tokyo fell sharply on Friday.",
            "Shares in Shanghai dropped as investors worried.",
        ],
        "sentences": [
            "Airlines slumped because travellers cancelled trips.",
            "Jerome Powell said the Federal Reserve was watching.",
            "Oil prices fell for a third day.",
            "Investors sold shares of casino operators.",
            "Analysts warned of a slowdown in tourism.",
            "Gold prices rose as investors sought safety.",
        ],
    },
    {
        "key": "uk_johnson",
        "source": "news",
        "day": "2020-01-24",
        "count": 14,
        "titles": [
            "Johnson chairs coronavirus meeting",
            "Britain traces travellers from Wuhan",
            "British health officials prepare for coronavirus",
        ],
        "lead": [
            "Johnson held a meeting with health officials in London.",
            "Matt Hancock said the risk to Britain remained low.",
        ],
        "sentences": [
            "Britain screened flights from Wuhan at Heathrow.",
            "London hospitals prepared isolation wards.",
            "Boris Johnson urged calm on Friday.",
            "Public Health England traced passengers.",
            "Doctors in London tested five patients.",
        ],
    },
    {
        "key": "lockdown_social",
        "source": "social",
        "day": "2020-01-24",
        "count": 14,
        "titles": [
            "Stuck in Wuhan and the trains stopped",
            "Cannot leave Wuhan for new year",
            "Wuhan streets are empty tonight",
        ],
        "lead": [
            "Stuck in Wuhan because the trains stopped.",
            "My family cannot leave Wuhan for new year.",
        ],
        "sentences": [
            "The streets are empty and quiet tonight.",
            "Supermarkets still have vegetables but no masks.",
            "We cancelled the reunion dinner this year.",
            "Everyone stays home watching the news.",
            "Praying for everyone in Hubei.",
        ],
    },
    {
        "key": "europe",
        "source": "news",
        "day": "2020-01-25",
        "count": 14,
        "titles": [
            "France confirms first coronavirus cases in Europe",
            "Coronavirus reaches Europe as France confirms cases",
            "Europe reports first coronavirus patients",
        ],
        "lead": [
            "France confirmed three cases in Paris.",
            "Emmanuel Macron said hospitals were ready.",
        ],
        "sentences": [
            "Germany screened passengers in Berlin.",
            "Italy suspended flights from China.",
            "The patients had travelled from Wuhan.",
            "Doctors isolated the patients in Bordeaux.",
            "Agnes Buzyn said the cases were under control.",
        ],
    },
]

# Stand-alone documents that should end up unclustered.
NOISE_NEWS = [
    ("2020-01-23", "Local football club signs new striker", "The club signed the striker on a three year contract. Fans celebrated outside the stadium."),
    ("2020-01-23", "Rain expected across Sydney this weekend", "Forecasters expect heavy rain in Sydney on Saturday. Outdoor concerts were moved indoors."),
    ("2020-01-23", "Wuhan University scientists publish study on China wetlands", "Researchers at Wuhan University mapped wetlands across China. The study tracked migrating birds over a decade."),
    ("2020-01-23", "Museum opens new dinosaur wing", "The museum unveiled a skeleton of a giant herbivore. School groups queued at the entrance."),
    ("2020-01-23", "Chef wins regional baking prize", "The chef baked a sourdough loaf with rye and honey. Judges praised the crust."),
    ("2020-01-24", "Trump rally draws crowds in Iowa", "Supporters of Donald Trump filled an arena in Des Moines. Trump spoke about farming and trade with China."),
    ("2020-01-24", "Tennis star advances to quarter final", "The tennis star won in straight sets. Her serve was dominant throughout the match."),
    ("2020-01-24", "City council approves new cycle lanes", "The council voted to build cycle lanes downtown. Residents welcomed the decision."),
    ("2020-01-24", "Film festival announces lineup", "The festival announced forty films from twelve countries. Tickets go on sale next week."),
    ("2020-01-24", "Johnson visits flood defences in Yorkshire", "Boris Johnson inspected flood barriers near York. Engineers explained the pumping system."),
    ("2020-01-25", "Astronomers spot distant comet", "Astronomers photographed a comet beyond Jupiter. The comet will pass closest next spring."),
    ("2020-01-25", "Vintage car auction sets record", "A vintage roadster sold for a record price. Collectors bid by telephone."),
    ("2020-01-25", "Orchestra performs winter concert", "The orchestra played symphonies by candlelight. The conductor bowed to a standing ovation."),
]

NOISE_SOCIAL = [
    ("2020-01-23", "Lunch with friends", "Having ramen with friends downtown. Best noodles in town honestly."),
    ("2020-01-23", "Monday feeling on a Thursday", "Coffee is the only thing keeping me awake. Send help and biscuits."),
    ("2020-01-23", "Finished my first marathon", "Crossed the finish line after four hours. My legs are jelly."),
    ("2020-01-23", "New puppy at home", "Meet our golden retriever puppy. She chewed my slippers already."),
    ("2020-01-24", "Rainy day reading", "Curled up with a mystery novel and tea. Perfect weekend plan."),
    ("2020-01-24", "Concert tickets secured", "Got tickets for the band in March. Cannot wait to sing along."),
    ("2020-01-24", "Gardening update", "The tomatoes finally turned red. Planting basil next."),
    ("2020-01-24", "Game night", "Lost at chess again to my little brother. Rematch tomorrow."),
]

FRENCH = [
    ("news", "2020-01-23", "Singapour confirme un premier cas", "Le gouvernement a confirmé le premier cas du virus dans la ville. Les autorités ont isolé le patient."),
    ("news", "2020-01-24", "Les marchés asiatiques reculent", "Les bourses de la région ont chuté avec les craintes liées au virus. Les investisseurs restent prudents."),
    ("news", "2020-01-25", "La France confirme trois cas", "Les patients sont soignés dans des hôpitaux de Paris et de Bordeaux. La ministre a appelé au calme."),
    ("social", "2020-01-23", "Plus de masques", "Toutes les pharmacies du quartier sont vides. Que faire maintenant."),
    ("social", "2020-01-24", "Nouvel an confiné", "Nous restons à la maison pour le nouvel an. Courage à tous."),
]

SINGAPORE_FIXTURE = {
    "title": "Singapore confirms first coronavirus case on 23 January 2020",
    "body": (
        "The Ministry of Health said a visitor from Wuhan tested positive. "
        "The patient was isolated because he had a fever. "
        "Officials traced contacts by checking flight records."
    ),
}

SOURCE_NAMES = {"news": ["Straits Wire", "Global Desk", "Asia Herald"], "social": ["reddit.com"]}


def load_lemmas():
    table = {}
    for line in (ROOT / "resources" / "lemmas.tsv").read_text().splitlines():
        if not line or line.startswith("#") or "\t" not in line:
            continue
        form, lemma = line.split("\t", 1)
        table[form.strip().lower()] = lemma.strip().lower()
    return table


def tokenize(text):
    ascii_text = "".join(c for c in text if ord(c) < 128)
    return [t.lower() for t in re.split(r"[^A-Za-z0-9]+", ascii_text) if t]


def lemmatize(token, lemmas):
    if token in lemmas:
        return lemmas[token]
    if token.endswith("ies"):
        return token[:-3] + "y"
    if token.endswith("sses"):
        return token[:-4] + "ss"
    if len(token) > 1 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def stamp(day, minutes):
    base = datetime.fromisoformat(day).replace(tzinfo=timezone.utc)
    return base + timedelta(minutes=minutes)


def iso(t):
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def build_documents(rng):
    docs = []
    counters = Counter()

    def add(source, day, title, body, label, minutes):
        counters[source] += 1
        published = stamp(day, minutes)
        doc = {
            "id": f"{source}-{counters[source]:04d}",
            "source_type": source,
            "source_name": rng.choice(SOURCE_NAMES[source]),
            "title": title,
            "body": body,
            "published_at": iso(published),
            "fetched_at": iso(published + timedelta(hours=2)),
        }
        if source == "news":
            doc["url"] = f"https://news.example.org/{day}/{counters[source]:04d}"
        else:
            doc["url"] = f"https://social.example.org/p/{counters[source]:04d}"
        docs.append((doc, label))
        return doc

    for topic in TOPICS:
        for i in range(topic["count"]):
            minutes = 60 + i * 37 + rng.randrange(30)
            if topic["key"] == "sg_case" and i == 0:
                add("news", topic["day"], SINGAPORE_FIXTURE["title"], SINGAPORE_FIXTURE["body"], topic["key"], minutes)
                continue
            title = topic["titles"][i % len(topic["titles"])]
            lead = topic["lead"][i % len(topic["lead"])]
            extra = rng.sample(topic["sentences"], rng.randint(2, 4))
            body = " ".join([lead] + extra)
            add(topic["source"], topic["day"], title, body, topic["key"], minutes)

    for i, (day, title, body) in enumerate(NOISE_NEWS):
        add("news", day, title, body, f"noise-news-{i}", 900 + i * 11)
    for i, (day, title, body) in enumerate(NOISE_SOCIAL):
        add("social", day, title, body, f"noise-social-{i}", 900 + i * 13)
    for i, (source, day, title, body) in enumerate(FRENCH):
        add(source, day, title, body, f"french-{i}", 1000 + i * 7)

    # exact re-posts of earlier bodies, published later, to exercise dedupe
    originals = [d for d, label in docs if label in ("wuhan_lockdown", "markets", "sg_social")][:6:2]
    for orig in originals:
        day = orig["published_at"][:10]
        copy = add(orig["source_type"], day, orig["title"], orig["body"], "duplicate", 1300)
        copy["source_name"] = orig["source_name"]
    return docs


def build_vectors(docs, rng):
    lemmas = load_lemmas()
    stop = set((ROOT / "resources" / "stopwords.txt").read_text().split())
    labels = sorted({label for _, label in docs})
    directions = {label: rng.standard_normal(DIMS) for label in labels}
    for v in directions.values():
        v /= np.linalg.norm(v)
    counts = defaultdict(Counter)
    for doc, label in docs:
        for tok in tokenize(doc["title"] + " " + doc["body"]):
            if tok in stop:
                continue
            counts[lemmatize(tok, lemmas)][label] += 1
            counts[tok][label] += 1
    vectors = {}
    for word in sorted(counts):
        c = counts[word]
        total = sum(c.values())
        v = sum((n / total) * directions[label] for label, n in sorted(c.items()))
        v = v + 0.08 * rng.standard_normal(DIMS)
        vectors[word] = v
    return vectors


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=False) + "\n")


def write_feed(path):
    items = [
        ("Singapore tightens screening at Changi", "https://feeds.example.org/changi",
         "Thu, 23 Jan 2020 09:30:00 +0800",
         "<p>Singapore expanded temperature screening to all flights from China.</p>"),
        ("Hubei cancels new year celebrations", "https://feeds.example.org/hubei",
         "Fri, 24 Jan 2020 08:00:00 +0000", "Authorities in Hubei cancelled public events."),
        ("Markets steady after volatile week", "https://feeds.example.org/markets", "", ""),
    ]
    out = ['<?xml version="1.0" encoding="UTF-8"?>', '<rss version="2.0">', "  <channel>",
           "    <title>Example Wire</title>"]
    for title, link, date, desc in items:
        out.append("    <item>")
        out.append(f"      <title>{title}</title>")
        out.append(f"      <link>{link}</link>")
        if date:
            out.append(f"      <pubDate>{date}</pubDate>")
        if desc:
            out.append(f"      <description><![CDATA[{desc}]]></description>")
        out.append("    </item>")
    out += ["  </channel>", "</rss>", ""]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out), encoding="utf-8")


def main():
    rng = random.Random(SEED)
    docs = build_documents(rng)
    write_jsonl(ROOT / "corpus" / "news.jsonl", [d for d, _ in docs if d["source_type"] == "news"])
    write_jsonl(ROOT / "corpus" / "social.jsonl", [d for d, _ in docs if d["source_type"] == "social"])
    write_feed(ROOT / "feeds" / "sample.xml")
    vectors = build_vectors(docs, np.random.default_rng(SEED))
    with (ROOT / "resources" / "vectors.txt").open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(vectors)} {DIMS}\n")
        for word, v in vectors.items():
            f.write(word + " " + " ".join(f"{x:.5f}" for x in v) + "\n")
    print(f"{len(docs)} documents, {len(vectors)} vectors")


if __name__ == "__main__":
    main()
