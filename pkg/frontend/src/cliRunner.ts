// Spawns the cloudbridge CLI. This is the extension's only integration seam:
// every remote effect flows through one child process at a time.

import { spawn } from 'child_process';
import { CliResult } from './types';

export class CliBusyError extends Error {
	constructor() {
		super('a cloudbridge invocation is already in flight');
	}
}

export class CliMissingError extends Error {
	constructor(public cliPath: string) {
		super(`cloudbridge CLI not found at '${cliPath}'`);
	}
}

export class CliRunner {
	private inFlight = false;

	constructor(
		private readonly cliPath: string,
		private readonly configPath: string,
		private readonly extraEnv: NodeJS.ProcessEnv = {},
	) {}

	get busy(): boolean {
		return this.inFlight;
	}

	/**
	 * Run one subcommand to completion. Rejects with CliBusyError when an
	 * invocation is already running and with CliMissingError when the binary
	 * cannot be spawned.
	 */
	run(args: string[]): Promise<CliResult> {
		if (this.inFlight) {
			return Promise.reject(new CliBusyError());
		}
		this.inFlight = true;
		return new Promise<CliResult>((resolve, reject) => {
			const child = spawn(this.cliPath, ['--config', this.configPath, ...args], {
				env: { ...process.env, ...this.extraEnv },
			});
			let stdout = '';
			let stderr = '';
			child.stdout.on('data', (chunk) => { stdout += chunk; });
			child.stderr.on('data', (chunk) => { stderr += chunk; });
			child.on('error', (err: NodeJS.ErrnoException) => {
				this.inFlight = false;
				reject(err.code === 'ENOENT' ? new CliMissingError(this.cliPath) : err);
			});
			child.on('close', (code) => {
				this.inFlight = false;
				resolve({ exitCode: code ?? 1, stdout, stderr });
			});
		});
	}
}
