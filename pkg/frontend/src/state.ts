// Phase mirror of the bridge lifecycle, re-derived from CLI exit codes only.
// The extension never trusts its own mutations: a crashed CLI invocation
// cannot leave the mirror claiming a session that does not exist.

import { CompileReport, EXIT_OK, EXIT_USAGE } from './types';

export type Phase = 'uninitialized' | 'logged_in' | 'closed';

export type BridgeCommand = 'login' | 'pull' | 'push' | 'exit' | 'run';

export class ExtensionState {
	phase: Phase = 'uninitialized';
	lastReport: CompileReport | undefined;

	constructor(public cliPath: string, public configPath: string) {}

	/** Fold one finished CLI invocation into the phase mirror. */
	applyCliOutcome(command: BridgeCommand, exitCode: number): Phase {
		switch (command) {
			case 'login':
				// The CLI tears its session down when login fails, so any
				// nonzero exit means there is no live session to mirror.
				this.phase = exitCode === EXIT_OK ? 'logged_in' : 'uninitialized';
				break;
			case 'pull':
			case 'push':
				if (exitCode === EXIT_OK) {
					this.phase = 'logged_in';
				} else if (exitCode === EXIT_USAGE) {
					// Usage means no session state was found: nothing is open.
					this.phase = 'uninitialized';
				}
				// Compile/transport errors leave the session alive; keep phase.
				break;
			case 'exit':
				this.phase = 'closed';
				break;
			case 'run':
				// A full cycle is self-contained and never touches the session
				// the other commands share.
				break;
		}
		return this.phase;
	}

	canLogin(): boolean {
		return this.phase !== 'logged_in';
	}

	canPull(): boolean {
		return this.phase === 'logged_in';
	}

	canPush(): boolean {
		return this.phase === 'logged_in';
	}

	canExit(): boolean {
		return this.phase === 'logged_in';
	}

	canRun(): boolean {
		return true;
	}
}
