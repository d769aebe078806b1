# Copyright 2026 The Unlearn Lab Authors
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the golden judge request bodies from prompts/*.txt.

Run from the repository root. The template file's final newline is not part
of the prompt.
"""

import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parents[2]
QUESTION = "Which award did Lena Varga receive ?"


def template(name):
    text = (ROOT / "prompts" / f"{name}.txt").read_text()
    return text[:-1] if text.endswith("\n") else text


def fill(text, values):
    for key, value in values.items():
        text = text.replace("{" + key + "}", value)
    return text


def main():
    bodies = {
        "judge_answer_request.json": fill(template("judge_answer"), {
            "question": QUESTION,
            "reference": "Golden Lantern Award",
            "answer": "Silver Quill Prize",
        }),
        "judge_leakage_request.json": fill(template("judge_leakage"), {
            "answer": "Golden Lantern Award",
            "question": QUESTION,
            "generated_cot": "Lena Varga writes poetry .\n\nShe won a prize .",
        }),
    }
    out = ROOT / "tests" / "fixtures"
    for name, prompt in bodies.items():
        with open(out / name, "w") as f:
            json.dump({"model": "mock-judge", "prompt": prompt}, f, indent=2)
            f.write("\n")


if __name__ == "__main__":
    main()
