"""Interactive task-decomposition service for AI-assisted data analysis.

The package is organised around the lifecycle of an analysis session:

- :mod:`datasteer.profiling` ingests CSV datasets and builds the textual
  summary handed to the language model.
- :mod:`datasteer.tokens`, :mod:`datasteer.blocks`, :mod:`datasteer.parsing`
  define the structured response grammar (assumption/action lines, plans,
  code fences) and its round-trippable serializer.
- :mod:`datasteer.provider` and :mod:`datasteer.repair` call the model (live
  or scripted from fixtures) and retry on malformed output.
- :mod:`datasteer.graph` holds the session tree: components, pending and
  submitted edits, and branches.
- :mod:`datasteer.engine` drives the three strategies (conversational,
  stepwise, phasewise) on top of the graph.
- :mod:`datasteer.kernel` is the code-execution layer: wire protocol,
  in-process stub kernel, and the per-branch kernel manager.
- :mod:`datasteer.side` implements side conversations (ask question,
  generate code, side query).
- :mod:`datasteer.server` binds everything into an HTTP + SSE API.
"""

__version__ = "0.1.0"
