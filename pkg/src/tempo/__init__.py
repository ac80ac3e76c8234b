"""Goal-induction engine over screen activity.

Abstracts a stream of screen-activity observations into a four-level
property graph (operations, actions, activities, strivings) and co-creates
that graph with the user: edits persist as constraints enforced in prompts
and by write-time guards on every pipeline mutation.
"""

__version__ = "0.1.0"
